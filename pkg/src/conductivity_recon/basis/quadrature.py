"""Quadrature rules on the reference triangle and on the unit interval.

Triangle rules are collapsed (Stroud conical product) Gauss rules: a
Gauss-Jacobi rule with weight (1 - s) in the collapsed direction times a
Gauss-Legendre rule along the fibre. With m points per direction the rule is
exact for every monomial x^a y^b with a + b <= 2m - 1. Edge rules are plain
Gauss-Legendre on [0, 1].

Reference triangle: {(0, 0), (1, 0), (0, 1)}, measure 1/2.

Public API:
    QuadratureRule: Points and weights with their declared degree
    triangle_quadrature: Rule on the reference triangle exact to a degree
    edge_quadrature: Rule on [0, 1] exact to a degree
    monomial_integral: Closed-form integral of x^a y^b over the reference triangle
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

from ..errors import InvalidArgumentError

MAX_TRIANGLE_DEGREE = 30
MAX_EDGE_DEGREE = 60


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature points (reference coordinates) with weights.

    Attributes:
        points: (q, dim) array; dim is 2 for triangles and 1 for edges
        weights: (q,) array summing to the reference measure
        degree: Highest total polynomial degree integrated exactly
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int) -> QuadratureRule:
    """Return a rule on the reference triangle exact for total degree ``degree``.

    Raises:
        InvalidArgumentError: If degree is negative or above MAX_TRIANGLE_DEGREE.
    """
    if degree < 0 or degree > MAX_TRIANGLE_DEGREE:
        raise InvalidArgumentError(
            f"triangle quadrature degree must be in [0, {MAX_TRIANGLE_DEGREE}], got {degree}"
        )
    m = degree // 2 + 1
    xi, wj = roots_jacobi(m, 1.0, 0.0)
    zeta, wl = np.polynomial.legendre.leggauss(m)
    s = 0.5 * (1.0 + xi)
    t = 0.5 * (1.0 + zeta)

    ss, tt = np.meshgrid(s, t, indexing="ij")
    points = np.column_stack([ss.ravel(), ((1.0 - ss) * tt).ravel()])
    weights = (np.outer(wj, wl) / 8.0).ravel()
    _freeze(points, weights)
    return QuadratureRule(points=points, weights=weights, degree=degree)


@lru_cache(maxsize=None)
def edge_quadrature(degree: int) -> QuadratureRule:
    """Return a Gauss-Legendre rule on [0, 1] exact for polynomials of ``degree``.

    Raises:
        InvalidArgumentError: If degree is negative or above MAX_EDGE_DEGREE.
    """
    if degree < 0 or degree > MAX_EDGE_DEGREE:
        raise InvalidArgumentError(f"edge quadrature degree must be in [0, {MAX_EDGE_DEGREE}], got {degree}")
    m = degree // 2 + 1
    zeta, w = np.polynomial.legendre.leggauss(m)
    points = (0.5 * (1.0 + zeta)).reshape(-1, 1)
    weights = 0.5 * w
    _freeze(points, weights)
    return QuadratureRule(points=points, weights=weights, degree=degree)


def monomial_integral(a: int, b: int) -> float:
    """Exact value of the integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


__all__ = [
    "QuadratureRule",
    "triangle_quadrature",
    "edge_quadrature",
    "monomial_integral",
    "MAX_TRIANGLE_DEGREE",
    "MAX_EDGE_DEGREE",
]
