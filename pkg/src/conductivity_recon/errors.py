"""Exception hierarchy shared by every stage of the reconstruction pipeline.

Each class doubles as the matching builtin (ValueError, RuntimeError, ...)
so callers that only know the standard exceptions still catch them.

Public API:
    ReconstructionError: Base class
    InvalidArgumentError: Bad argument or configuration value
    DataError: Measurement or boundary data that cannot be used
    SolverError: Linear solver did not reach the requested residual
    UnsupportedError: Operation not available for the given case
    StageError: Failure of one pipeline stage, tagged with the stage name
"""

from __future__ import annotations


class ReconstructionError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ReconstructionError, ValueError):
    """An argument is outside its supported range."""


class DataError(ReconstructionError, ValueError):
    """Input data are inconsistent (incompatible flux, rank-deficient fit)."""


class SolverError(ReconstructionError, RuntimeError):
    """A linear solve failed or stopped above the requested tolerance."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class UnsupportedError(ReconstructionError, NotImplementedError):
    """The requested operation has no meaning for this input."""


class StageError(ReconstructionError, RuntimeError):
    """Wraps the error raised inside one stage of ``reconstruct``."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


__all__ = [
    "ReconstructionError",
    "InvalidArgumentError",
    "DataError",
    "SolverError",
    "UnsupportedError",
    "StageError",
]
