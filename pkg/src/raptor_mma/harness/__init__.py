"""Experiment configuration, figure runners, CSV output and the command line."""

from .config import FIGURES, ConfigError, ExperimentSpec, build_spec
from .experiments import ResultRow, run_experiment
from .output import render_csv, strip_timestamp

__all__ = ["FIGURES", "ConfigError", "ExperimentSpec", "ResultRow", "build_spec", "run_experiment",
           "render_csv", "strip_timestamp"]
