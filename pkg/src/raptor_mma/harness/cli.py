"""Command line: ``simulate``, ``analyze`` and ``codec-bench``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, build_spec
from .experiments import run_experiment
from .output import format_value, render_csv

__all__ = ["main", "build_parser", "analyze"]

ANALYZE_OPS = ("min-snr-cdf", "min-snr-cdf-poisson", "eqw-rate", "exw-weights", "grw-weights", "acb-p",
               "overhead-rbs", "required-rbs", "phi", "asymptotic-degree")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("fast", "full"))
    p.add_argument("--trials", type=int, help="trials per point (frames for system figures)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV path; stdout when omitted")
    p.add_argument("--config", help="key=value file, or a previous output CSV")
    p.add_argument("--llr-form", choices=("standard", "paper"))
    p.add_argument("--acb-p", choices=("standard", "paper"))
    p.add_argument("--workers", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any parameter")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="raptor-mma", description="Raptor-coded multiple access simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a figure experiment")
    sim.add_argument("--figure", required=True)
    _add_run_flags(sim)

    bench = sub.add_parser("codec-bench", help="single-device rate-efficiency histogram")
    _add_run_flags(bench)

    an = sub.add_parser("analyze", help="evaluate a closed-form quantity")
    an.add_argument("--op", required=True, choices=ANALYZE_OPS)
    an.add_argument("--L", type=int, default=16, help="device count")
    an.add_argument("--gamma-db", type=float, default=20.0, help="total SNR, dB")
    an.add_argument("--gamma0-db", type=float, help="per-device target SNR, dB (overrides --gamma-db)")
    an.add_argument("--lam", type=float, default=50.0)
    an.add_argument("--grid", default="0:0.05:2", help="start:step:stop")
    an.add_argument("--counts", default="1,2,1", help="GrW group sizes")
    an.add_argument("--mean-shift", type=float, default=0.0)
    an.add_argument("--n-s", type=int, default=64)
    an.add_argument("--scheme", choices=("original", "timing-advance"), default="original")
    an.add_argument("--acb-p", choices=("standard", "paper"), default="standard")
    an.add_argument("--k", type=int, default=1024)
    an.add_argument("--rate", type=float, default=0.1, help="minimum rate, bits per use")
    an.add_argument("--delta", type=float, default=1.0)
    an.add_argument("--gamma-w", type=float, default=1.0)
    an.add_argument("--max-degree", type=int, default=60)
    an.add_argument("--out")
    return ap


def _grid(text: str) -> np.ndarray:
    try:
        a, step, b = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"grid must be start:step:stop, got {text!r}") from exc
    if step <= 0 or b < a:
        raise ConfigError("grid needs step > 0 and stop >= start")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def _table(header: list[str], rows) -> str:
    return ",".join(header) + "\n" + "".join(",".join(format_value(v) for v in r) + "\n" for r in rows)


def analyze(args: argparse.Namespace) -> str:
    """Text output of one ``analyze`` operation."""
    from ..analysis import (AcbConfig, acb_transmit_probability, min_rate_eqw, min_snr_cdf,
                            min_snr_cdf_conditional, min_snr_model, weight_overhead_rbs)
    from ..codec.degree import asymptotic_degree_distribution, phi
    from ..msd import required_rbs
    from ..superposition import exw_optimal_weights, grw_profile

    op = args.op
    gamma = 10 ** (args.gamma_db / 10)
    if args.gamma0_db is not None:
        g0 = 10 ** (args.gamma0_db / 10)
    else:
        g0 = math.expm1(math.log1p(gamma) / max(args.L, 1))
    if op in ("min-snr-cdf", "min-snr-cdf-poisson"):
        # grid is the ratio x / gamma0; the cdf is 0 at x = 0
        xs = _grid(args.grid)
        vals = np.zeros_like(xs)
        pos = xs > 0
        if op == "min-snr-cdf":
            if args.L < 1:
                raise ConfigError("--L must be >= 1")
            vals[pos] = min_snr_cdf_conditional(xs[pos] * g0, min_snr_model(args.L, g0, args.mean_shift))
        else:
            vals[pos] = min_snr_cdf(xs[pos] * g0, args.lam, g0, mean_shift=args.mean_shift)
        return _table(["x", "cdf"], zip(xs.tolist(), vals.tolist()))
    if op == "eqw-rate":
        return _table(["L", "gamma_db", "min_rate"], [(args.L, args.gamma_db, min_rate_eqw(args.L, 1 / gamma))])
    if op == "exw-weights":
        return exw_optimal_weights(args.L, g0).to_csv()
    if op == "grw-weights":
        try:
            counts = [int(c) for c in args.counts.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --counts {args.counts!r}") from exc
        return grw_profile(counts, g0).to_csv()
    if op == "acb-p":
        cfg = AcbConfig(args.scheme, args.n_s, p_mode=args.acb_p)
        return _table(["N", "p"], [(args.L, acb_transmit_probability(cfg, args.L))])
    if op == "overhead-rbs":
        return _table(["N", "rbs"], [(args.L, weight_overhead_rbs(args.delta, args.L, args.gamma_w))])
    if op == "required-rbs":
        return _table(["k", "rate", "rbs"], [(args.k, args.rate, required_rbs(args.k, args.rate))])
    if op == "phi":
        xs = _grid(args.grid)
        return _table(["x", "phi"], zip(xs.tolist(), np.atleast_1d(phi(xs)).tolist()))
    dd, threshold = asymptotic_degree_distribution(args.max_degree)
    rows = [(d + 1, float(p)) for d, p in enumerate(dd.coefficients) if p > 0]
    return f"# threshold={float(threshold)!r}\n" + _table(["degree", "probability"], rows)


def _overrides(args: argparse.Namespace, figure: str) -> dict[str, str]:
    from .config import FIGURES

    out: dict[str, str] = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    keys = FIGURES.get(figure, {})
    if args.trials is not None:
        # system figures count frames rather than trials
        out["trials" if "trials" in keys or "frames" not in keys else "frames"] = str(args.trials)
    for flag, key in (("mode", "mode"), ("seed", "seed"), ("llr_form", "llr_form"), ("acb_p", "acb_p"),
                      ("workers", "workers")):
        val = getattr(args, flag)
        if val is not None:
            out[key] = str(val)
    return out


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    p = Path(path)
    if p.is_dir() or not p.parent.exists():
        raise ConfigError(f"cannot write output {path!r}")
    try:
        with open(p, "a"):
            pass
    except OSError as exc:
        raise ConfigError(f"cannot write output {path!r}: {exc}") from exc


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_writable(getattr(args, "out", None))
        if args.command == "analyze":
            text = analyze(args)
        else:
            figure = "codec-bench" if args.command == "codec-bench" else args.figure
            spec = build_spec(figure, args.config, _overrides(args, figure))
            text = render_csv(spec, run_experiment(spec))
    except (ConfigError, ValueError) as exc:
        print(f"raptor-mma: error: {exc}", file=sys.stderr)
        return 2
    _emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
