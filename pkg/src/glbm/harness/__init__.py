"""Experiment orchestration: CLI, specs, parallel Monte Carlo, reports."""

from .experiments import KINDS, ExperimentSpec, SpecValidationError, run, validate_spec
from .parallel import McResult, TrialFailure, mean_and_se, pairwise_sum, parallel_mc
from .presets import FIGURE_PRESETS, FigurePreset
from .reporting import ReportTable, RunManifest

__all__ = [
    "KINDS",
    "ExperimentSpec",
    "SpecValidationError",
    "run",
    "validate_spec",
    "McResult",
    "TrialFailure",
    "mean_and_se",
    "pairwise_sum",
    "parallel_mc",
    "FIGURE_PRESETS",
    "FigurePreset",
    "ReportTable",
    "RunManifest",
]
