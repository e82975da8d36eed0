"""Linear solves of the assembled transport system.

Systems up to DIRECT_LIMIT unknowns are factorized with SuperLU; larger ones
use restarted GMRES preconditioned by an incomplete LU factorization. Either
way the result must satisfy ||A x - b|| <= tol ||b||.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from ..data.fields import DGField
from ..errors import InvalidArgumentError, SolverError
from .assembly import SparseSystem

logger = logging.getLogger(__name__)

DIRECT_LIMIT = 200_000
DEFAULT_TOL = 1e-10
GMRES_RESTART = 100
GMRES_MAXITER = 50
MAX_REFINEMENTS = 3


@dataclass(frozen=True)
class SolveResult:
    """Solution vector and solver statistics."""

    field: DGField
    residual: float
    iterations: int
    method: str


def _relative_residual(system: SparseSystem, x: np.ndarray) -> float:
    b_norm = float(np.linalg.norm(system.rhs))
    r_norm = float(np.linalg.norm(system.matrix @ x - system.rhs))
    return r_norm / b_norm if b_norm > 0.0 else r_norm


def _direct(system: SparseSystem, tol: float) -> tuple[np.ndarray, int]:
    try:
        lu = splu(system.matrix.tocsc())
    except RuntimeError as e:
        raise SolverError(f"sparse factorization failed: {e}") from e
    x = lu.solve(system.rhs)
    steps = 1
    # iterative refinement with the same factors
    while steps <= MAX_REFINEMENTS and _relative_residual(system, x) > tol:
        x = x + lu.solve(system.rhs - system.matrix @ x)
        steps += 1
    return x, steps


def _iterative(system: SparseSystem, tol: float) -> tuple[np.ndarray, int]:
    a = system.matrix.tocsc()
    try:
        ilu = spilu(a, drop_tol=1e-6, fill_factor=20)
    except RuntimeError as e:
        raise SolverError(f"incomplete factorization failed: {e}") from e
    preconditioner = LinearOperator(a.shape, ilu.solve)
    count = 0

    def _count(_residual: float) -> None:
        nonlocal count
        count += 1

    x, info = gmres(
        a,
        system.rhs,
        rtol=tol,
        atol=0.0,
        restart=GMRES_RESTART,
        maxiter=GMRES_MAXITER,
        M=preconditioner,
        callback=_count,
        callback_type="pr_norm",
    )
    if info < 0:
        raise SolverError(f"GMRES breakdown (info={info})", iterations=count)
    return x, count


def solve_system(system: SparseSystem, tol: float = DEFAULT_TOL, method: str = "auto") -> SolveResult:
    """Solve ``system`` to relative residual ``tol``.

    Args:
        system: Assembled system
        tol: Required relative residual
        method: "auto", "direct" or "gmres"

    Raises:
        InvalidArgumentError: For a non-positive tol or unknown method.
        SolverError: If the residual stays above tol; carries the achieved residual.
    """
    if tol <= 0.0:
        raise InvalidArgumentError(f"solver tolerance must be > 0, got {tol}")
    if method == "auto":
        method = "direct" if system.size <= DIRECT_LIMIT else "gmres"
    if method == "direct":
        x, iterations = _direct(system, tol)
    elif method == "gmres":
        x, iterations = _iterative(system, tol)
    else:
        raise InvalidArgumentError(f"unknown solver method {method!r}")

    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite values", iterations=iterations)
    residual = _relative_residual(system, x)
    if residual > tol:
        raise SolverError(
            f"{method} solve stopped at relative residual {residual:.3e} (tol {tol:.1e})",
            residual=residual,
            iterations=iterations,
        )
    logger.info("Solved %d unknowns with %s (residual %.2e, %d iterations)", system.size, method, residual, iterations)
    return SolveResult(field=system.to_field(x), residual=residual, iterations=iterations, method=method)


def solve(system: SparseSystem, tol: float = DEFAULT_TOL) -> DGField:
    """gamma_h with ||A gamma - b|| / ||b|| <= tol."""
    return solve_system(system, tol).field


__all__ = ["SolveResult", "solve", "solve_system", "DIRECT_LIMIT", "DEFAULT_TOL"]
