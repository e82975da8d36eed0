"""Transport coefficients beta = grad U and mu_eps = lap(U) / 2 + eps.

Two sources of the internal datum are supported: a broken polynomial U
(differentiated exactly on each element, so beta is double-valued on interior
edges) and closed-form derivatives of an exact u.

Public API:
    VelocityField: Abstract coefficient provider used by the transport assembly
    PolynomialVelocity: Coefficients of a DGField datum
    AnalyticVelocity: Coefficients from closed-form grad u and lap u
    derive_fields: Build the PolynomialVelocity of a datum
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np

from ..mesh.structured import Mesh
from .fields import DGField

logger = logging.getLogger(__name__)


class VelocityField(ABC):
    """Element-wise beta and mu_eps evaluated at reference points.

    ``ref_points`` is either (q, 2), shared by all elements, or (N, q, 2)
    together with the N ``triangles`` the points belong to.
    """

    mesh: Mesh
    eps: float
    degree: int
    exact_divergence: bool

    @abstractmethod
    def beta_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        """beta, shape (N, q, 2)."""

    @abstractmethod
    def mu_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        """mu_eps, shape (N, q)."""

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """beta at physical points (N, 2), using the triangle that ``Mesh.locate`` picks."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri = self.mesh.locate(pts)
        ref = self.mesh.to_reference(pts, tri)
        return self.beta_at(ref[:, None, :], tri)[:, 0]


class PolynomialVelocity(VelocityField):
    """Exact derivatives of a broken polynomial datum.

    div(beta) = 2 (mu_eps - eps) holds exactly on each element, which the
    discrete coercivity identity relies on.
    """

    exact_divergence = True

    def __init__(self, datum: DGField, eps: float):
        self.datum = datum
        self.mesh = datum.mesh
        self.eps = float(eps)
        self.degree = max(datum.degree - 1, 0)

    def beta_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        return self.datum.gradients_at(ref_points, triangles)

    def mu_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        hess = self.datum.hessians_at(ref_points, triangles)
        return 0.5 * (hess[..., 0, 0] + hess[..., 1, 1]) + self.eps


class AnalyticVelocity(VelocityField):
    """Closed-form grad u and lap u evaluated at the physical quadrature points.

    ``degree`` only sizes the quadrature rules; the coefficients themselves are
    not polynomial.
    """

    exact_divergence = False

    def __init__(
        self,
        mesh: Mesh,
        grad_u: Callable[[np.ndarray], np.ndarray],
        laplacian_u: Callable[[np.ndarray], np.ndarray],
        eps: float,
        degree: int = 6,
    ):
        self.mesh = mesh
        self.grad_u = grad_u
        self.laplacian_u = laplacian_u
        self.eps = float(eps)
        self.degree = degree

    def _points(self, ref_points: np.ndarray, triangles: np.ndarray | None) -> np.ndarray:
        return self.mesh.to_physical(ref_points, triangles)

    def beta_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        pts = self._points(ref_points, triangles)
        return np.asarray(self.grad_u(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)

    def mu_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        pts = self._points(ref_points, triangles)
        lap = np.asarray(self.laplacian_u(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
        return 0.5 * lap + self.eps


def constant_velocity(mesh: Mesh, eps: float, direction: tuple[float, float] = (1.0, 0.0)) -> AnalyticVelocity:
    """beta = ``direction`` everywhere and mu_eps = eps."""
    beta = np.asarray(direction, dtype=float)
    return AnalyticVelocity(
        mesh,
        lambda p: np.tile(beta, (np.asarray(p).shape[0], 1)),
        lambda p: np.zeros(np.asarray(p).shape[0]),
        eps,
        degree=0,
    )


def derive_fields(datum: DGField, eps: float) -> PolynomialVelocity:
    """beta = grad U and mu_eps = lap(U) / 2 + eps, element by element."""
    if datum.degree < 2:
        logger.debug("Datum of degree %d has zero Laplacian on every element", datum.degree)
    return PolynomialVelocity(datum, eps)


__all__ = ["VelocityField", "PolynomialVelocity", "AnalyticVelocity", "constant_velocity", "derive_fields"]
