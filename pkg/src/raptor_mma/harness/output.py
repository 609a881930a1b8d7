"""CSV emission with ``#`` metadata headers."""

from __future__ import annotations

import io
import math
from datetime import datetime, timezone

from .config import ExperimentSpec
from .experiments import COLUMNS, ResultRow

__all__ = ["format_value", "render_csv", "strip_timestamp"]

_TIMESTAMP = "# generated="


def format_value(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(float(v))
    return str(v)


def render_csv(spec: ExperimentSpec, rows: list[ResultRow], timestamp: bool = True) -> str:
    """Header lines hold every resolved parameter; feeding the file back as
    ``--config`` reproduces it."""
    buf = io.StringIO()
    for line in spec.header_lines():
        buf.write(f"# {line}\n")
    if timestamp:
        buf.write(f"{_TIMESTAMP}{datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    cols = COLUMNS[spec.figure]
    buf.write(",".join(cols + ["metric", "mean", "stderr", "trials"]) + "\n")
    for r in rows:
        vals = [r.coords.get(c, "") for c in cols] + [r.metric, r.mean, r.stderr, r.trials]
        buf.write(",".join(format_value(v) for v in vals) + "\n")
    return buf.getvalue()


def strip_timestamp(text: str) -> str:
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith(_TIMESTAMP))
