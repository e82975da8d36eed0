"""Nodal Lagrange bases P^k on the reference triangle.

Nodes are the uniform lattice {(i/k, j/k): i + j <= k} ordered row by row
(j outer, i inner); degree 0 uses the centroid. Each basis function is stored
through its monomial coefficients, so values, gradients and Hessians are exact
polynomial evaluations.

Public API:
    BasisSet: Basis of one degree with vectorized evaluation
    lagrange_basis: Cached BasisSet for a degree
    eval_basis: Values and gradients of all basis functions at one point
    reference_lattice: Uniform lattice points of a given order
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidArgumentError

MAX_DEGREE = 6


def basis_dimension(k: int) -> int:
    """Number of P^k basis functions: (k + 1)(k + 2) / 2."""
    return (k + 1) * (k + 2) // 2


def reference_lattice(order: int) -> np.ndarray:
    """Uniform lattice of ``order`` on the reference triangle, (dim, 2) array."""
    if order == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]])
    pts = [(i / order, j / order) for j in range(order + 1) for i in range(order + 1 - j)]
    return np.array(pts, dtype=float)


def _exponents(k: int) -> np.ndarray:
    return np.array([(d - b, b) for d in range(k + 1) for b in range(d + 1)], dtype=int)


def _power(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    # x**p with x**0 == 1 and x**(-1) unused (masked by zero factors)
    return np.where(p >= 0, x ** np.maximum(p, 0), 0.0)


@dataclass(frozen=True)
class BasisSet:
    """Lagrange basis of degree ``degree`` on the reference triangle.

    Attributes:
        degree: Polynomial degree k
        nodes: (dim, 2) nodal points
        exponents: (dim, 2) monomial exponents (a, b) of x^a y^b
        coefficients: (dim, dim) monomial coefficients, column i is basis function i
    """

    degree: int
    nodes: np.ndarray
    exponents: np.ndarray
    coefficients: np.ndarray

    @property
    def dimension(self) -> int:
        return basis_dimension(self.degree)

    def _monomials(self, points: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.exponents[:, 0]
        b = self.exponents[:, 1]
        fa = np.ones_like(a, dtype=float)
        fb = np.ones_like(b, dtype=float)
        for i in range(dx):
            fa = fa * (a - i)
        for i in range(dy):
            fb = fb * (b - i)
        x = pts[:, 0:1]
        y = pts[:, 1:2]
        return (fa * fb) * _power(x, a - dx) * _power(y, b - dy)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Basis values at reference points, shape (q, dim)."""
        return self._monomials(points) @ self.coefficients

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """Reference gradients, shape (q, dim, 2)."""
        gx = self._monomials(points, dx=1) @ self.coefficients
        gy = self._monomials(points, dy=1) @ self.coefficients
        return np.stack([gx, gy], axis=-1)

    def hessians(self, points: np.ndarray) -> np.ndarray:
        """Reference Hessians, shape (q, dim, 2, 2)."""
        hxx = self._monomials(points, dx=2) @ self.coefficients
        hxy = self._monomials(points, dx=1, dy=1) @ self.coefficients
        hyy = self._monomials(points, dy=2) @ self.coefficients
        row0 = np.stack([hxx, hxy], axis=-1)
        row1 = np.stack([hxy, hyy], axis=-1)
        return np.stack([row0, row1], axis=-2)


@lru_cache(maxsize=None)
def lagrange_basis(k: int) -> BasisSet:
    """Return the cached nodal basis of degree ``k``.

    Raises:
        InvalidArgumentError: If k is outside [0, MAX_DEGREE].
    """
    if k < 0 or k > MAX_DEGREE:
        raise InvalidArgumentError(f"basis degree must be in [0, {MAX_DEGREE}], got {k}")
    nodes = reference_lattice(k)
    exps = _exponents(k)
    vandermonde = nodes[:, 0:1] ** exps[:, 0] * nodes[:, 1:2] ** exps[:, 1]
    coefficients = np.linalg.inv(vandermonde)
    for arr in (nodes, exps, coefficients):
        arr.setflags(write=False)
    return BasisSet(degree=k, nodes=nodes, exponents=exps, coefficients=coefficients)


def eval_basis(k: int, point: np.ndarray | tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate all degree-k basis functions at one reference point.

    Returns:
        (values, gradients) with shapes (dim,) and (dim, 2).
    """
    basis = lagrange_basis(k)
    p = np.asarray(point, dtype=float).reshape(1, 2)
    return basis.values(p)[0], basis.gradients(p)[0]


__all__ = [
    "BasisSet",
    "lagrange_basis",
    "eval_basis",
    "basis_dimension",
    "reference_lattice",
    "MAX_DEGREE",
]
