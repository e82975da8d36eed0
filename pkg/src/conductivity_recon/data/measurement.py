"""Point measurements of u, multiplicative noise, and element-wise projection.

Measurement points are the order-m lattice points of every data triangle,
merged globally so that a point shared by neighbouring triangles is measured
(and perturbed) once. Noise follows U = u (1 + delta xi) with xi uniform on
[-1, 1], drawn from a generator seeded by ``seed``: one xi per measurement
point ("pointwise") or one gain per data triangle ("element").

Public API:
    MeasurementSet: Global points, values and the element-to-point index
    measure: Sample an evaluator at the lattice points of a mesh
    add_noise: Multiplicative uniform noise on a MeasurementSet or DGField
    project_to_dg: Element-wise least-squares fit into the degree-k0 broken space
    relative_data_error: Relative l2 distance between noisy and clean samples
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np

from ..basis.lagrange import MAX_DEGREE, lagrange_basis, reference_lattice
from ..errors import DataError, InvalidArgumentError
from ..mesh.structured import Mesh
from .fields import DGField

logger = logging.getLogger(__name__)

MIN_USEFUL_K0 = 2
NOISE_MODELS = ("pointwise", "element")


@dataclass(frozen=True)
class MeasurementSet:
    """Samples of u at global measurement points.

    Attributes:
        mesh: Data mesh
        order: Lattice order m of the per-element points
        points: (P, 2) unique physical points
        values: (P,) measured values
        element_points: (T, (m+1)(m+2)/2) index of each element's points into ``points``
    """

    mesh: Mesh
    order: int
    points: np.ndarray
    values: np.ndarray
    element_points: np.ndarray

    @property
    def element_values(self) -> np.ndarray:
        return self.values[self.element_points]


def measurement_points(mesh: Mesh, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Unique lattice points of ``order`` on ``mesh`` and the element index into them."""
    if order < 0 or order > MAX_DEGREE:
        raise InvalidArgumentError(f"measurement order must be in [0, {MAX_DEGREE}], got {order}")
    phys = mesh.to_physical(reference_lattice(order))
    if order == 0:
        # centroids are never shared
        idx = np.arange(mesh.num_triangles).reshape(-1, 1)
        return phys.reshape(-1, 2), idx
    m = order * mesh.divisions
    lattice = np.rint(phys * m).astype(np.int64)
    keys = lattice[..., 0] * (m + 1) + lattice[..., 1]
    _, first, inverse = np.unique(keys.ravel(), return_index=True, return_inverse=True)
    points = phys.reshape(-1, 2)[first]
    return points, inverse.reshape(keys.shape)


def measure(u: Callable[[np.ndarray], np.ndarray], mesh: Mesh, order: int) -> MeasurementSet:
    """Evaluate ``u`` at the order-``order`` lattice points of every triangle."""
    points, index = measurement_points(mesh, order)
    values = np.asarray(u(points), dtype=float).reshape(-1)
    logger.debug("Measured u at %d points (order %d, n=%d)", points.shape[0], order, mesh.divisions)
    return MeasurementSet(mesh=mesh, order=order, points=points, values=values, element_points=index)


def _per_element(data: MeasurementSet) -> MeasurementSet:
    """The same samples with every triangle owning its own copy of shared points."""
    index = np.arange(data.element_points.size).reshape(data.element_points.shape)
    points = data.points[data.element_points].reshape(-1, 2)
    return replace(data, points=points, values=data.element_values.ravel(), element_points=index)


def add_noise(
    data: MeasurementSet | DGField, delta: float, seed: int, model: str = "pointwise"
) -> MeasurementSet | DGField:
    """Return ``data`` with every sample multiplied by 1 + delta * xi, xi ~ U(-1, 1).

    Samples are the measurement values of a MeasurementSet or the nodal
    coefficients of a DGField. With ``model="pointwise"`` every sample gets
    its own xi. With ``model="element"`` all samples of a triangle share one
    gain, and a point on a shared edge is measured once per triangle. The
    same seed reproduces the same draws.

    Raises:
        InvalidArgumentError: If delta is negative or the model is unknown.
    """
    if delta < 0.0:
        raise InvalidArgumentError(f"noise level must be >= 0, got {delta}")
    if model not in NOISE_MODELS:
        raise InvalidArgumentError(f"noise model must be one of {', '.join(NOISE_MODELS)}, got {model!r}")
    if not isinstance(data, MeasurementSet | DGField):
        raise InvalidArgumentError(f"cannot add noise to {type(data).__name__}")
    if delta == 0.0:
        return data
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    if isinstance(data, DGField):
        shape = (data.coefficients.shape[0], 1) if model == "element" else data.coefficients.shape
        factor = 1.0 + delta * rng.uniform(-1.0, 1.0, size=shape)
        logger.debug("Perturbed %d coefficients with delta=%g (%s)", data.coefficients.size, delta, model)
        return DGField(data.mesh, data.degree, data.coefficients * factor)

    if model == "element":
        data = _per_element(data)
        gains = 1.0 + delta * rng.uniform(-1.0, 1.0, size=(data.element_points.shape[0], 1))
        values = (data.element_values * gains).ravel()
    else:
        values = data.values * (1.0 + delta * rng.uniform(-1.0, 1.0, size=data.values.shape))
    logger.debug("Perturbed %d samples with delta=%g (%s)", values.size, delta, model)
    return replace(data, values=values)


def relative_data_error(noisy: MeasurementSet, clean: MeasurementSet) -> float:
    """||noisy - clean|| / ||clean|| over the samples of every triangle."""
    clean_values = clean.element_values
    norm = float(np.linalg.norm(clean_values))
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(noisy.element_values - clean_values)) / norm


def project_to_dg(
    u: MeasurementSet | DGField | Callable[[np.ndarray], np.ndarray],
    mesh: Mesh,
    k0: int,
    order: int | None = None,
) -> DGField:
    """Fit a degree-``k0`` polynomial to the measurements of each triangle.

    ``u`` may be measurements on ``mesh``, a DGField on ``mesh`` (sampled per
    element) or a point evaluator (measured at the order-``order`` lattice,
    default k0). With exactly (k0+1)(k0+2)/2 points per element the fit is
    interpolation; with more it is least squares.

    Raises:
        DataError: If an element has too few points for a unique fit.
    """
    if k0 < MIN_USEFUL_K0:
        logger.warning("k0=%d gives a piecewise-zero Laplacian; reconstruction quality will be poor", k0)
    basis = lagrange_basis(k0)

    if isinstance(u, MeasurementSet):
        if u.mesh is not mesh and u.mesh.divisions != mesh.divisions:
            raise DataError(f"measurements were taken on n={u.mesh.divisions}, projecting on n={mesh.divisions}")
        m = u.order
        samples = u.element_values
    elif isinstance(u, DGField):
        if u.mesh is not mesh and u.mesh.divisions != mesh.divisions:
            raise DataError(f"field lives on n={u.mesh.divisions}, projecting on n={mesh.divisions}")
        m = order if order is not None else max(k0, u.degree)
        samples = u.values_at(reference_lattice(m))
    else:
        m = order if order is not None else k0
        samples = measure(u, mesh, m).element_values

    lattice = reference_lattice(m)
    vandermonde = basis.values(lattice)
    rank = np.linalg.matrix_rank(vandermonde)
    if rank < basis.dimension:
        raise DataError(
            f"{lattice.shape[0]} measurement points per element cannot determine "
            f"{basis.dimension} coefficients of degree {k0} (rank {rank})"
        )
    if vandermonde.shape[0] == vandermonde.shape[1]:
        coefficients = np.linalg.solve(vandermonde, samples.T).T
    else:
        coefficients = np.linalg.lstsq(vandermonde, samples.T, rcond=None)[0].T
    logger.debug("Projected to degree %d on n=%d with %d points per element", k0, mesh.divisions, lattice.shape[0])
    return DGField(mesh, k0, coefficients)


__all__ = [
    "MeasurementSet",
    "measurement_points",
    "measure",
    "add_noise",
    "relative_data_error",
    "project_to_dg",
    "MIN_USEFUL_K0",
    "NOISE_MODELS",
]
