"""Reconstruction pipeline: configuration, runner, metrics, sweeps and the property suite."""

from __future__ import annotations

from .config import RunConfig, expand_grid, load_config_file, parse_config_text
from .metrics import SlopeFit, error_halfnorm, fit_loglog, l2_error, rerror
from .runner import CSV_COLUMNS, ReconstructionReport, print_report, reconstruct, save_outputs
from .sweep import SweepReport, SweepRow, print_sweep_report, run_sweep, sweep
from .verify import VerificationReport, print_verification, run_verification

__all__ = [
    "RunConfig",
    "parse_config_text",
    "load_config_file",
    "expand_grid",
    "error_halfnorm",
    "rerror",
    "l2_error",
    "SlopeFit",
    "fit_loglog",
    "ReconstructionReport",
    "reconstruct",
    "save_outputs",
    "print_report",
    "CSV_COLUMNS",
    "SweepRow",
    "SweepReport",
    "run_sweep",
    "sweep",
    "print_sweep_report",
    "VerificationReport",
    "run_verification",
    "print_verification",
]
