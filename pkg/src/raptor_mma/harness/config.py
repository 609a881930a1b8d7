"""Experiment configuration: typed parameters, per-figure defaults, overrides.

Sources are applied in order: figure defaults, a ``key = value`` file,
environment variables ``RAPTOR_MMA_<KEY>``, then ``--set`` arguments. A key
that the chosen figure does not declare is a configuration error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "ENV_PREFIX",
    "FIGURES",
    "PARAMS",
    "ConfigError",
    "ExperimentSpec",
    "parse_kv_text",
    "build_spec",
]

ENV_PREFIX = "RAPTOR_MMA_"


class ConfigError(ValueError):
    pass


def _float_list(s: str) -> list[float]:
    return [float(x) for x in str(s).split(",") if x.strip()]


def _int_list(s: str) -> list[int]:
    return [int(float(x)) for x in str(s).split(",") if x.strip()]


def _str_list(s: str) -> list[str]:
    return [x.strip() for x in str(s).split(",") if x.strip()]


def _choice(*options):
    def parse(s):
        s = str(s).strip()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


# name -> (parser, help)
PARAMS = {
    "mode": (_choice("fast", "full"), "system decoding model"),
    "trials": (int, "Monte Carlo trials per sweep point"),
    "frames": (int, "frames per system run"),
    "seeds": (int, "independent system runs per sweep point"),
    "seed": (int, "base seed"),
    "workers": (int, "worker processes (results do not depend on it)"),
    "k": (int, "message bits per device"),
    "n_s": (int, "preambles"),
    "n_zc": (int, "PRACH sequence length"),
    "radius": (float, "cell radius, m"),
    "prach_snr_db": (float, "PRACH per-device SNR, dB"),
    "corr_factor": (float, "load-estimator correlation threshold / N_ZC"),
    "energy_margin": (float, "load-estimator energy-gate margin"),
    "num_devices": (_int_list, "device counts swept"),
    "lam": (_float_list, "arrival rates swept (devices per frame)"),
    "gamma_db": (_float_list, "total SNRs swept, dB"),
    "gamma0_db": (_float_list, "fixed per-device target SNRs swept, dB"),
    "gamma_max_db": (_float_list, "adaptive-power SNR caps swept, dB"),
    "gamma0_max": (float, "cap on the adaptive per-device target (linear)"),
    "schemes": (_str_list, "schemes simulated"),
    "data_rbs": (int, "data RBs per frame"),
    "w_s": (float, "RB bandwidth, Hz"),
    "tau_s": (float, "RB duration, s"),
    "frame_length": (float, "frame duration, s"),
    "bins": (int, "histogram bins"),
    "x_max": (float, "histogram upper edge (ratio to target SNR)"),
    "mean_shift": (float, "calibration shift of the min-SNR model mean"),
    "eff_mean": (float, "fast-mode efficiency mean"),
    "eff_sd": (float, "fast-mode efficiency spread"),
    "eff_floor": (float, "fast-mode efficiency floor"),
    "planning_efficiency": (float, "efficiency assumed when sizing the data channel"),
    "deferral": (_choice("largest", "smallest", "random"), "group eviction policy"),
    "load_source": (_choice("genie", "algorithm1"), "where the BS load estimate comes from"),
    "delta": (float, "weight-sequence expansion factor"),
    "gamma_w": (float, "weight-sequence SNR (linear)"),
    "snr_db": (_float_list, "link SNRs swept, dB"),
    "schedule": (_choice("search", "scan"), "rateless decode-attempt schedule"),
    "max_iters": (int, "SPA iterations per attempt"),
    "llr_form": (_choice("standard", "paper"), "channel LLR scaling"),
    "acb_p": (_choice("standard", "paper"), "ACB barring probability form"),
}

_COMMON = {"seed": "1", "workers": "1", "k": "1024"}
_SYSTEM = {
    **_COMMON, "mode": "fast", "frames": "200", "seeds": "1", "n_s": "64", "radius": "1500", "data_rbs": "100",
    "w_s": "1e6", "tau_s": "1e-3", "frame_length": "0.01", "gamma0_max": "10", "eff_mean": "0.87",
    "eff_sd": "0.06", "eff_floor": "0.6", "planning_efficiency": "0.6", "deferral": "largest",
    "load_source": "genie", "n_zc": "839", "prach_snr_db": "0", "delta": "1", "gamma_w": "1",
    "llr_form": "standard", "acb_p": "standard",
}

FIGURES: dict[str, dict[str, str]] = {
    "fig3": {**_COMMON, "trials": "200", "n_s": "20", "n_zc": "100", "radius": "1500", "prach_snr_db": "0",
             "corr_factor": "0.65", "energy_margin": "0.1", "num_devices": "20,40,60,80,100"},
    "fig6": {**_COMMON, "trials": "2000", "num_devices": "16,32,64,128", "gamma_db": "20", "bins": "30",
             "x_max": "1.5", "mean_shift": "-0.03"},
    "fig7": {**_COMMON, "trials": "2000", "num_devices": "8,16,32,64,128", "gamma_db": "0,10,20",
             "mean_shift": "0", "w_s": "1e6", "tau_s": "1e-3"},
    "fig8": {**_SYSTEM, "schemes": "proposed-grw,proposed-exw", "n_s": "20", "data_rbs": "1000000000",
             "lam": "50,100,200,300,400,500", "gamma0_db": "-20,-10"},
    "fig9": {**_SYSTEM, "schemes": "proposed-grw,proposed-exw", "n_s": "20", "data_rbs": "1000000000",
             "lam": "50,100,200,300,400,500", "gamma_max_db": "30"},
    "fig10": {**_SYSTEM, "frames": "100", "seeds": "10", "schemes": "acb-original,acb-ta,proposed-grw",
              "lam": "25,50,100,200,300,400,500", "gamma_max_db": "10,30"},
    "fig11": {**_SYSTEM, "frames": "100", "seeds": "10", "schemes": "acb-original,acb-ta,proposed-grw",
              "lam": "16,32,48,64,96,128,200,300,400,500", "gamma_max_db": "10,30"},
    "custom": {**_SYSTEM, "schemes": "proposed-grw", "lam": "100", "gamma_max_db": "30"},
    "codec-bench": {**_COMMON, "trials": "100", "snr_db": "-10", "bins": "20", "schedule": "search",
                    "max_iters": "100", "llr_form": "standard"},
}

_LIST_KEYS = {"num_devices", "lam", "gamma_db", "gamma0_db", "gamma_max_db", "schemes", "snr_db"}


@dataclass
class ExperimentSpec:
    """Resolved parameters of one experiment. ``raw`` keeps the text form for headers."""

    figure: str
    raw: dict[str, str]
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def header_lines(self) -> list[str]:
        return [f"figure={self.figure}"] + [f"{k}={self.raw[k]}" for k in sorted(self.raw)]


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` comments and ``# key=value`` CSV headers both work."""
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("#"):
            s = s.lstrip("#").strip()
            if "=" not in s:
                continue
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"line {n}: expected key=value, got {line!r}")
        key, val = s.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def build_spec(figure: str, config_file: str | os.PathLike | None = None,
               overrides: dict[str, str] | None = None, environ: dict[str, str] | None = None) -> ExperimentSpec:
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    raw = dict(FIGURES[figure])
    layers = []
    if config_file is not None:
        try:
            text = Path(config_file).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if text.lstrip().startswith("# figure="):
            # a previous output CSV: only its header block is configuration
            lines = text.splitlines()
            end = next((n for n, line in enumerate(lines) if not line.startswith("#")), len(lines))
            text = "\n".join(lines[:end])
        file_vals = parse_kv_text(text)
        # a CSV header names its own figure and generation time
        file_vals.pop("generated", None)
        fig = file_vals.pop("figure", figure)
        if fig != figure:
            raise ConfigError(f"config is for {fig!r}, not {figure!r}")
        layers.append(("config file", file_vals))
    env = os.environ if environ is None else environ
    layers.append(("environment", {k[len(ENV_PREFIX):].lower(): v for k, v in env.items()
                                   if k.startswith(ENV_PREFIX)}))
    layers.append(("arguments", overrides or {}))
    for source, vals in layers:
        for key, val in vals.items():
            if key not in raw:
                if source == "environment":
                    continue  # CI may export keys for other figures
                raise ConfigError(f"{source}: parameter {key!r} is not used by {figure}")
            raw[key] = str(val)
    values = {}
    for key, text in raw.items():
        parser = PARAMS[key][0]
        try:
            values[key] = parser(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from exc
        if key in _LIST_KEYS and not values[key]:
            raise ConfigError(f"sweep {key} is empty")
    for key in ("trials", "frames", "seeds", "workers"):
        if key in values and values[key] < 1:
            raise ConfigError(f"{key} must be >= 1")
    return ExperimentSpec(figure, raw, values)
