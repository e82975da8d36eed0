"""Broken polynomial fields on a Mesh and their CSV persistence.

A DGField stores, per triangle, the nodal values of a degree-k Lagrange
polynomial (see ``basis.lagrange``). Evaluation at a point inside a triangle
only touches that triangle's coefficients.

CSV layout::

    # degree=3
    # n=48
    # basis=lagrange-uniform
    triangle_id,coeff_0,...,coeff_9
    0,1.0,...

Public API:
    DGField: Element-wise polynomial field
    interpolate: Nodal interpolation of a point function
    transfer: Re-interpolate a field onto another mesh
    write_field_csv / read_field_csv: CSV round-trip
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..basis.lagrange import MAX_DEGREE, BasisSet, basis_dimension, lagrange_basis
from ..errors import DataError, InvalidArgumentError
from ..mesh.structured import Mesh, build_structured_mesh
from ..mesh.vtk import SAMPLE_REFERENCE_POINTS

logger = logging.getLogger(__name__)

BASIS_NAME = "lagrange-uniform"

# target nodes are pulled this far toward their centroid before locating them in the source mesh
_SHRINK = 1e-9


def _tables(basis: BasisSet, ref_points: np.ndarray, kind: str) -> tuple[np.ndarray, str]:
    """Basis table plus its einsum prefix: "q" for shared points, "nq" for per-element points."""
    ref = np.asarray(ref_points, dtype=float)
    if ref.ndim == 2:
        return getattr(basis, kind)(ref), "q"
    table = getattr(basis, kind)(ref.reshape(-1, 2))
    return table.reshape(ref.shape[0], ref.shape[1], *table.shape[1:]), "nq"


@dataclass(frozen=True)
class DGField:
    """Element-wise polynomial of degree ``degree`` on ``mesh``.

    Attributes:
        mesh: Underlying triangulation
        degree: Polynomial degree k
        coefficients: (T, (k+1)(k+2)/2) nodal values per triangle
    """

    mesh: Mesh
    degree: int
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        expected = (self.mesh.num_triangles, basis_dimension(self.degree))
        if np.shape(self.coefficients) != expected:
            raise InvalidArgumentError(
                f"coefficient array has shape {np.shape(self.coefficients)}, expected {expected}"
            )

    @classmethod
    def zeros(cls, mesh: Mesh, degree: int) -> DGField:
        return cls(mesh, degree, np.zeros((mesh.num_triangles, basis_dimension(degree))))

    @property
    def basis(self) -> BasisSet:
        return lagrange_basis(self.degree)

    @property
    def dimension(self) -> int:
        return basis_dimension(self.degree)

    @property
    def vector(self) -> np.ndarray:
        """Coefficients flattened element-major (the transport system ordering)."""
        return self.coefficients.reshape(-1)

    def _coeffs(self, triangles: np.ndarray | None) -> np.ndarray:
        return self.coefficients if triangles is None else self.coefficients[triangles]

    def _inv_jac(self, triangles: np.ndarray | None) -> np.ndarray:
        inv = self.mesh.inverse_jacobians
        return inv if triangles is None else inv[triangles]

    def values_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        """Values at reference points.

        ``ref_points`` is (q, 2) for points shared by every element or (N, q, 2)
        for per-element points; ``triangles`` selects the N elements (all if None).
        Returns (N, q).
        """
        phi, lead = _tables(self.basis, ref_points, "values")
        return np.einsum(f"{lead}d,nd->nq", phi, self._coeffs(triangles))

    def gradients_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        """Physical gradients at reference points, (N, q, 2)."""
        dphi, lead = _tables(self.basis, ref_points, "gradients")
        ref_grad = np.einsum(f"{lead}dk,nd->nqk", dphi, self._coeffs(triangles))
        return np.einsum("nkj,nqk->nqj", self._inv_jac(triangles), ref_grad)

    def hessians_at(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        """Physical Hessians at reference points, (N, q, 2, 2)."""
        d2phi, lead = _tables(self.basis, ref_points, "hessians")
        ref_hess = np.einsum(f"{lead}dkl,nd->nqkl", d2phi, self._coeffs(triangles))
        inv = self._inv_jac(triangles)
        return np.einsum("nka,nqkl,nlb->nqab", inv, ref_hess, inv)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at physical points (N, 2); points on shared edges take the located triangle's value."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tri = self.mesh.locate(pts)
        ref = self.mesh.to_reference(pts, tri)
        return self.values_at(ref[:, None, :], tri)[:, 0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)

    def vtk_samples(self) -> np.ndarray:
        """(T, 4) values at the vertices and centroid of each triangle."""
        return self.values_at(SAMPLE_REFERENCE_POINTS)

    def squared(self) -> DGField:
        """Pointwise square, exact for degree <= MAX_DEGREE / 2."""
        target = min(2 * self.degree, MAX_DEGREE)
        if 2 * self.degree > MAX_DEGREE:
            logger.debug("Squaring a degree-%d field into degree %d (interpolated)", self.degree, target)
        nodes = lagrange_basis(target).nodes
        return DGField(self.mesh, target, self.values_at(nodes) ** 2)


def interpolate(fn: Callable[[np.ndarray], np.ndarray], mesh: Mesh, degree: int) -> DGField:
    """Nodal interpolation of ``fn`` into the broken degree-``degree`` space."""
    nodes = lagrange_basis(degree).nodes
    pts = mesh.to_physical(nodes)
    values = np.asarray(fn(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])
    return DGField(mesh, degree, values)


def transfer(field: DGField, mesh: Mesh) -> DGField:
    """Re-interpolate ``field`` onto ``mesh`` keeping its degree.

    Every target node is evaluated with the polynomial of the source triangle
    that contains the node pulled slightly toward its target centroid, so the
    result is exact whenever each target triangle lies inside one source
    triangle (target n a multiple of source n).
    """
    if mesh is field.mesh:
        return field
    nodes = field.basis.nodes
    pts = mesh.to_physical(nodes)
    centroids = mesh.centroids[:, None, :]
    inner = centroids + (1.0 - _SHRINK) * (pts - centroids)
    src = field.mesh.locate(inner.reshape(-1, 2))
    ref = field.mesh.to_reference(pts.reshape(-1, 2), src)
    values = field.values_at(ref[:, None, :], src)[:, 0].reshape(pts.shape[:2])
    logger.debug(
        "Transferred degree-%d field from n=%d to n=%d", field.degree, field.mesh.divisions, mesh.divisions
    )
    return DGField(mesh, field.degree, values)


def write_field_csv(field: DGField, path: str | Path) -> Path:
    """Write ``field`` with a metadata header; values use round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# degree={field.degree}\n")
        f.write(f"# n={field.mesh.divisions}\n")
        f.write(f"# basis={BASIS_NAME}\n")
        writer = csv.writer(f)
        writer.writerow(["triangle_id"] + [f"coeff_{i}" for i in range(field.dimension)])
        for t, row in enumerate(field.coefficients):
            writer.writerow([t] + [repr(float(c)) for c in row])
    logger.debug("Wrote DG field to %s", path)
    return path


def read_field_csv(path: str | Path, mesh: Mesh | None = None) -> DGField:
    """Read a field written by ``write_field_csv``.

    Raises:
        DataError: If the header is missing or inconsistent with the data or ``mesh``.
    """
    path = Path(path)
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    with open(path, newline="") as f:
        for line in f:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            else:
                rows = list(csv.reader([line, *f]))
                break

    try:
        degree = int(meta["degree"])
        n = int(meta["n"])
    except (KeyError, ValueError) as e:
        raise DataError(f"{path}: missing or malformed metadata header ({e})") from e
    if meta.get("basis", BASIS_NAME) != BASIS_NAME:
        raise DataError(f"{path}: unsupported basis {meta['basis']!r}")
    if mesh is None:
        mesh = build_structured_mesh(n)
    elif mesh.divisions != n:
        raise DataError(f"{path}: field was written for n={n}, mesh has n={mesh.divisions}")

    body = [r for r in rows[1:] if r]
    coefficients = np.zeros((mesh.num_triangles, basis_dimension(degree)))
    if len(body) != mesh.num_triangles:
        raise DataError(f"{path}: expected {mesh.num_triangles} rows, found {len(body)}")
    for r in body:
        coefficients[int(r[0])] = [float(v) for v in r[1:]]
    return DGField(mesh, degree, coefficients)


__all__ = [
    "DGField",
    "interpolate",
    "transfer",
    "write_field_csv",
    "read_field_csv",
    "BASIS_NAME",
]
