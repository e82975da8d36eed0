"""Manufactured conductivity cases on the unit square.

Four cases are available:

    1. Smooth exponential pair with closed-form u and sigma; div(sigma grad u) = 0.
    2. Peaks-type sigma with Neumann datum g = exp(x1 + x2) - (e^2 - 1)/2; u only
       available numerically (see ``forward.elliptic``).
    3. Case 2 measured with multiplicative noise.
    4. Piecewise-constant sigma (2 on [0.375, 0.625]^2, 1 elsewhere) with the
       harmonic closed form cos(x1 - 0.5) exp(x2) used for the oracles. Its
       measurements come from an elliptic solve with the inclusion edge
       resolved over INCLUSION_EDGE_WIDTH.

All evaluators take points of shape (N, 2) and are vectorized.

Public API:
    ManufacturedCase: Closed-form evaluators for one case
    manufactured_case: Look up a case by id
    transport_residual: Max residual of 2 grad(gamma).grad(u) + gamma lap(u)
    regularized_solution: Exact regularized gamma for case 1
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, UnsupportedError

logger = logging.getLogger(__name__)

PointFunction = Callable[[np.ndarray], np.ndarray]
BoundaryFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

INCLUSION_LOW = 0.375
INCLUSION_HIGH = 0.625
INCLUSION_CONTRAST = 2.0
INCLUSION_EDGE_WIDTH = 0.04

_FD_STEP = 1e-6


def _xy(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    return pts[..., 0], pts[..., 1]


@dataclass(frozen=True)
class ManufacturedCase:
    """Evaluators of one manufactured case.

    Attributes:
        case_id: 1..4
        name: Short label used in logs and reports
        sigma: Conductivity
        neumann: Boundary flux g(x, normal) = sigma d_nu u
        u: Closed-form interior datum, if any
        grad_u: Gradient of u, if any
        laplacian_u: Laplacian of u, if any
        grad_gamma: Gradient of gamma = sqrt(sigma), if differentiable in closed form
        noisy: Whether the case is meant to be run with noisy data
        data_sigma: Conductivity the measured u is synthesized with, if not ``sigma``
        notes: Free-form metadata echoed into reports
    """

    case_id: int
    name: str
    sigma: PointFunction
    neumann: BoundaryFunction
    u: PointFunction | None = None
    grad_u: PointFunction | None = None
    laplacian_u: PointFunction | None = None
    grad_gamma: PointFunction | None = None
    noisy: bool = False
    data_sigma: PointFunction | None = None
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def has_closed_form(self) -> bool:
        return self.u is not None

    def gamma(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(self.sigma(points))

    def boundary_mean(self, quadrature_points: int = 40) -> float:
        """Integral of g over the boundary of the unit square (Gauss-Legendre per side)."""
        t, w = np.polynomial.legendre.leggauss(quadrature_points)
        s = 0.5 * (1.0 + t)
        w = 0.5 * w
        zeros = np.zeros_like(s)
        ones = np.ones_like(s)
        sides = [
            (np.column_stack([s, zeros]), (0.0, -1.0)),
            (np.column_stack([ones, s]), (1.0, 0.0)),
            (np.column_stack([s, ones]), (0.0, 1.0)),
            (np.column_stack([zeros, s]), (-1.0, 0.0)),
        ]
        total = 0.0
        for pts, normal in sides:
            normals = np.tile(np.asarray(normal), (pts.shape[0], 1))
            total += float(w @ self.neumann(pts, normals))
        return total


# ── case 1 ──────────────────────────────────────────────────────


def _u1(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    return np.exp(0.5 - x + (y - 0.5) ** 2)


def _grad_u1(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    u = _u1(points)
    return np.stack([-u, 2.0 * (y - 0.5) * u], axis=-1)


def _lap_u1(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    return _u1(points) * (3.0 + 4.0 * (y - 0.5) ** 2)


def _sigma1(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    return np.exp(3.0 * x - 0.5 - (y - 0.5) ** 2)


def _grad_gamma1(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    g = np.sqrt(_sigma1(points))
    return np.stack([1.5 * g, -(y - 0.5) * g], axis=-1)


def _flux_from(sigma: PointFunction, grad_u: PointFunction) -> BoundaryFunction:
    def neumann(points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        return sigma(points) * np.einsum("...i,...i->...", grad_u(points), normals)

    return neumann


# ── case 2 / 3 ──────────────────────────────────────────────────


def _peaks(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (
        1.0
        + 0.3 * (1.0 - x) ** 2 * np.exp(-(x**2) - (y + 1.0) ** 2)
        - (x / 5.0 - x**3 - y**5) * np.exp(-(x**2) - y**2)
        - np.exp(-((x + 1.0) ** 2) - y**2) / 30.0
    )


def _sigma2(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    return _peaks(3.0 * (2.0 * x - 1.0), 3.0 * (2.0 * y - 1.0))


def _g2(points: np.ndarray, normals: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    return np.exp(x + y) - (math.e**2 - 1.0) / 2.0


# ── case 4 ──────────────────────────────────────────────────────


def _u4(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    return np.cos(x - 0.5) * np.exp(y)


def _grad_u4(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    ey = np.exp(y)
    return np.stack([-np.sin(x - 0.5) * ey, np.cos(x - 0.5) * ey], axis=-1)


def _lap_u4(points: np.ndarray) -> np.ndarray:
    x, _ = _xy(points)
    return np.zeros_like(x)


def _sigma4(points: np.ndarray) -> np.ndarray:
    x, y = _xy(points)
    inside = (x >= INCLUSION_LOW) & (x <= INCLUSION_HIGH) & (y >= INCLUSION_LOW) & (y <= INCLUSION_HIGH)
    return np.where(inside, INCLUSION_CONTRAST, 1.0)



def _smooth_window(t: np.ndarray) -> np.ndarray:
    rise = np.tanh((t - INCLUSION_LOW) / INCLUSION_EDGE_WIDTH)
    fall = np.tanh((t - INCLUSION_HIGH) / INCLUSION_EDGE_WIDTH)
    return 0.5 * (rise - fall)


def _sigma4_data(points: np.ndarray) -> np.ndarray:
    """The inclusion with tanh edges; equal to 1 on the boundary to within 1e-8."""
    x, y = _xy(points)
    return 1.0 + (INCLUSION_CONTRAST - 1.0) * _smooth_window(x) * _smooth_window(y)


def _fd_gradient(fn: PointFunction) -> PointFunction:
    def grad(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        ex = np.array([_FD_STEP, 0.0])
        ey = np.array([0.0, _FD_STEP])
        gx = (fn(pts + ex) - fn(pts - ex)) / (2.0 * _FD_STEP)
        gy = (fn(pts + ey) - fn(pts - ey)) / (2.0 * _FD_STEP)
        return np.stack([gx, gy], axis=-1)

    return grad


def _build_case(case_id: int) -> ManufacturedCase:
    if case_id == 1:
        return ManufacturedCase(
            case_id=1,
            name="exponential",
            sigma=_sigma1,
            neumann=_flux_from(_sigma1, _grad_u1),
            u=_u1,
            grad_u=_grad_u1,
            laplacian_u=_lap_u1,
            grad_gamma=_grad_gamma1,
        )
    if case_id in (2, 3):
        return ManufacturedCase(
            case_id=case_id,
            name="peaks" if case_id == 2 else "peaks-noisy",
            sigma=_sigma2,
            neumann=_g2,
            noisy=case_id == 3,
        )
    if case_id == 4:
        return ManufacturedCase(
            case_id=4,
            name="inclusion",
            sigma=_sigma4,
            neumann=_flux_from(_sigma4, _grad_u4),
            u=_u4,
            grad_u=_grad_u4,
            laplacian_u=_lap_u4,
            grad_gamma=_fd_gradient(lambda p: np.sqrt(_sigma4(p))),
            noisy=True,
            data_sigma=_sigma4_data,
            notes={
                "sigma": (
                    f"{INCLUSION_CONTRAST:g} on [{INCLUSION_LOW}, {INCLUSION_HIGH}]^2, 1 elsewhere (stand-in inclusion)"
                ),
                "data": (
                    "measured from the elliptic solve with g = d_nu(cos(x1 - 0.5) exp(x2)) and the inclusion "
                    f"edge smoothed over {INCLUSION_EDGE_WIDTH:g}"
                ),
            },
        )
    raise InvalidArgumentError(f"unknown case id {case_id}; expected 1, 2, 3 or 4")


def manufactured_case(case_id: int) -> ManufacturedCase:
    """Return the evaluators of case ``case_id``.

    Raises:
        InvalidArgumentError: If the id is not 1, 2, 3 or 4.
    """
    case = _build_case(int(case_id))
    logger.debug("Loaded manufactured case %d (%s)", case.case_id, case.name)
    return case


def transport_residual(case: ManufacturedCase, points: np.ndarray) -> float:
    """Max |2 grad(gamma).grad(u) + gamma lap(u)| over ``points``.

    Raises:
        UnsupportedError: If the case has no closed-form u.
    """
    if not case.has_closed_form or case.grad_gamma is None:
        raise UnsupportedError(f"case {case.case_id} has no closed-form u; transport residual undefined")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gamma = case.gamma(pts)
    residual = 2.0 * np.einsum("ni,ni->n", case.grad_gamma(pts), case.grad_u(pts)) + gamma * case.laplacian_u(pts)
    return float(np.max(np.abs(residual)))


def regularized_solution(
    case: ManufacturedCase, points: np.ndarray, eps: float, quadrature_points: int = 40
) -> np.ndarray:
    """Exact solution of the regularized transport problem with exact data (case 1).

    Along the characteristics x2 - 1/2 = C exp(-2 x1) of grad u the regularized
    solution is gamma * exp(-eps * tau), where tau is the travel time from the
    inflow side x1 = 1.

    Raises:
        UnsupportedError: For any case other than 1.
    """
    if case.case_id != 1:
        raise UnsupportedError(f"closed-form regularized solution only exists for case 1, not {case.case_id}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    c = (y - 0.5) * np.exp(2.0 * x)
    t, w = np.polynomial.legendre.leggauss(quadrature_points)
    half = 0.5 * (1.0 - x)
    s = x[:, None] + half[:, None] * (t[None, :] + 1.0)
    integrand = np.exp(s - 0.5 - (c[:, None] ** 2) * np.exp(-4.0 * s))
    tau = half * (integrand @ w)
    return case.gamma(pts) * np.exp(-eps * tau)


__all__ = [
    "ManufacturedCase",
    "manufactured_case",
    "transport_residual",
    "regularized_solution",
    "INCLUSION_LOW",
    "INCLUSION_HIGH",
    "INCLUSION_CONTRAST",
    "INCLUSION_EDGE_WIDTH",
]
