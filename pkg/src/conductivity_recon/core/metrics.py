"""Reconstruction error metrics and log-log rate fits.

Error  = integral of |gamma - gamma_h|^(1/2)
RError = ||gamma - gamma_h||_L2 / ||gamma||_L2

The half-power integrand is not smooth where the error changes sign, so both
metrics use a degree-10 rule on every sub-triangle of a 4x uniform refinement
of each element.

Public API:
    error_halfnorm, rerror, l2_error, field_minimum: Integrated metrics
    composite_rule: Refined reference quadrature used by the metrics
    SlopeFit / fit_loglog: Least-squares slope of log10(y) against log10(x)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..basis.quadrature import triangle_quadrature
from ..data.fields import DGField
from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

METRIC_REFINEMENT = 4
METRIC_DEGREE = 10

Exact = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def composite_rule(refine: int = METRIC_REFINEMENT, degree: int = METRIC_DEGREE) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights of ``degree`` rules on the refine^2 sub-triangles of the reference triangle."""
    if refine < 1:
        raise InvalidArgumentError(f"refinement must be >= 1, got {refine}")
    base = triangle_quadrature(degree)
    h = 1.0 / refine
    corners = []
    for j in range(refine):
        for i in range(refine - j):
            corners.append(((i, j), (i + 1, j), (i, j + 1)))
            if i + j < refine - 1:
                corners.append(((i + 1, j), (i + 1, j + 1), (i, j + 1)))
    points = []
    for a, b, c in corners:
        a, b, c = (np.asarray(v, dtype=float) * h for v in (a, b, c))
        jac = np.column_stack([b - a, c - a])
        points.append(a + base.points @ jac.T)
    pts = np.concatenate(points)
    weights = np.tile(base.weights * h * h, len(corners))
    pts.setflags(write=False)
    weights.setflags(write=False)
    return pts, weights


def _difference(exact: Exact, approx: DGField, refine: int, degree: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ref, w = composite_rule(refine, degree)
    mesh = approx.mesh
    phys = mesh.to_physical(ref)
    exact_vals = np.asarray(exact(phys.reshape(-1, 2)), dtype=float).reshape(phys.shape[:2])
    weights = w[None, :] * (2.0 * mesh.areas)[:, None]
    return exact_vals, approx.values_at(ref), weights


def error_halfnorm(
    exact: Exact, approx: DGField, refine: int = METRIC_REFINEMENT, degree: int = METRIC_DEGREE
) -> float:
    """Integral of |exact - approx|^(1/2) over the mesh."""
    exact_vals, approx_vals, weights = _difference(exact, approx, refine, degree)
    return float(np.sum(weights * np.sqrt(np.abs(exact_vals - approx_vals))))


def l2_error(exact: Exact, approx: DGField, refine: int = METRIC_REFINEMENT, degree: int = METRIC_DEGREE) -> float:
    """||exact - approx||_L2."""
    exact_vals, approx_vals, weights = _difference(exact, approx, refine, degree)
    return math.sqrt(float(np.sum(weights * (exact_vals - approx_vals) ** 2)))


def rerror(exact: Exact, approx: DGField, refine: int = METRIC_REFINEMENT, degree: int = METRIC_DEGREE) -> float:
    """||exact - approx||_L2 / ||exact||_L2.

    Raises:
        InvalidArgumentError: If the exact field has zero norm.
    """
    exact_vals, approx_vals, weights = _difference(exact, approx, refine, degree)
    norm = math.sqrt(float(np.sum(weights * exact_vals**2)))
    if norm == 0.0:
        raise InvalidArgumentError("relative error undefined: exact field is identically zero")
    return math.sqrt(float(np.sum(weights * (exact_vals - approx_vals) ** 2))) / norm


def field_minimum(field: DGField, refine: int = 2, degree: int = 4) -> float:
    """Minimum of ``field`` over the composite quadrature points."""
    ref, _ = composite_rule(refine, degree)
    return float(field.values_at(ref).min())


@dataclass(frozen=True)
class SlopeFit:
    """Ordinary least squares fit log10(y) = slope * log10(x) + intercept."""

    slope: float
    intercept: float
    r2: float
    points: int

    def to_dict(self) -> dict[str, float | int]:
        return {
            "slope": round(self.slope, 4),
            "intercept": round(self.intercept, 4),
            "r2": round(self.r2, 4),
            "points": self.points,
        }


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    """Fit a power law through (x, y).

    Raises:
        InvalidArgumentError: With fewer than 3 points or non-positive values.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.shape != ys.shape or xs.size < 3:
        raise InvalidArgumentError(f"slope fit needs at least 3 paired points, got {xs.size}")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise InvalidArgumentError("slope fit needs strictly positive values")
    lx, ly = np.log10(xs), np.log10(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    predicted = slope * lx + intercept
    ss_res = float(np.sum((ly - predicted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return SlopeFit(slope=float(slope), intercept=float(intercept), r2=r2, points=int(xs.size))


__all__ = [
    "composite_rule",
    "error_halfnorm",
    "rerror",
    "l2_error",
    "field_minimum",
    "SlopeFit",
    "fit_loglog",
    "METRIC_REFINEMENT",
    "METRIC_DEGREE",
]
