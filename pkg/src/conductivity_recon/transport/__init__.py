"""Upwind DG assembly and solution of the regularized transport equation."""

from .assembly import (
    DEFAULT_PENALTY,
    CoercivityTerms,
    SparseSystem,
    TransportProblem,
    apply_bilinear,
    assemble,
    coercivity_terms,
    trace_identity_defect,
    write_matrix_market,
)
from .solver import DEFAULT_TOL, DIRECT_LIMIT, SolveResult, solve, solve_system

__all__ = [
    "TransportProblem",
    "SparseSystem",
    "CoercivityTerms",
    "assemble",
    "apply_bilinear",
    "coercivity_terms",
    "trace_identity_defect",
    "write_matrix_market",
    "DEFAULT_PENALTY",
    "SolveResult",
    "solve",
    "solve_system",
    "DEFAULT_TOL",
    "DIRECT_LIMIT",
]
