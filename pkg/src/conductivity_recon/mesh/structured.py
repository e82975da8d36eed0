"""Structured conforming triangulations of the unit square.

Each of the n x n cells is split along the diagonal from (i/n, j/n) to
((i+1)/n, (j+1)/n), which gives h = sqrt(2)/n (n = 48 -> h = 0.0295,
n = 24 -> h = 0.0589).

Edge convention: every edge stores a left triangle and, for interior edges, a
right triangle. The unit normal n_e points from left to right, so the left
triangle lies on the -n_e side; on the boundary n_e is the outward normal.

Public API:
    Mesh: Immutable triangulation with edge topology and geometry
    BoundaryClassification: Inflow/outflow/characteristic label per boundary edge
    build_structured_mesh: Build the n x n mesh
    classify_boundary: Label boundary edges by the sign of the integrated flux
    check_mesh: Return a list of violated mesh invariants (empty = valid)
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ..basis.quadrature import edge_quadrature
from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

INTERIOR = 0
BOTTOM = 1
RIGHT = 2
TOP = 3
LEFT = 4
BOUNDARY_NAMES = {BOTTOM: "bottom", RIGHT: "right", TOP: "top", LEFT: "left"}

INFLOW = "inflow"
OUTFLOW = "outflow"
CHARACTERISTIC = "characteristic"


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of [0, 1]^2.

    Attributes:
        vertices: (V, 2) coordinates
        triangles: (T, 3) counterclockwise vertex indices
        edges: (E, 2) vertex indices, oriented counterclockwise as seen from the left triangle
        edge_left: (E,) left triangle index
        edge_right: (E,) right triangle index, -1 on the boundary
        edge_normals: (E, 2) unit normals pointing from left to right (outward on the boundary)
        edge_lengths: (E,) edge lengths
        boundary_tags: (E,) INTERIOR or one of BOTTOM/RIGHT/TOP/LEFT
        areas: (T,) triangle areas
        h: Maximum triangle diameter
        divisions: Subdivisions per side (n)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_left: np.ndarray
    edge_right: np.ndarray
    edge_normals: np.ndarray
    edge_lengths: np.ndarray
    boundary_tags: np.ndarray
    areas: np.ndarray
    h: float
    divisions: int

    @property
    def num_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_right < 0)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_right >= 0)

    @property
    def jacobians(self) -> np.ndarray:
        """(T, 2, 2) affine maps x = v0 + J xi with columns v1 - v0, v2 - v0."""
        v = self.vertices[self.triangles]
        return np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)

    @property
    def inverse_jacobians(self) -> np.ndarray:
        return np.linalg.inv(self.jacobians)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    def to_physical(self, ref_points: np.ndarray, triangles: np.ndarray | None = None) -> np.ndarray:
        """Map reference points (q, 2), or per-element points (N, q, 2), into triangles: (N, q, 2)."""
        tri = self.triangles if triangles is None else self.triangles[triangles]
        v0 = self.vertices[tri[:, 0]]
        jac = self.jacobians if triangles is None else self.jacobians[triangles]
        ref = np.asarray(ref_points, dtype=float)
        pattern = "tij,qj->tqi" if ref.ndim == 2 else "tij,tqj->tqi"
        return v0[:, None, :] + np.einsum(pattern, jac, ref)

    def to_reference(self, points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
        """Reference coordinates of physical ``points`` (N, 2) inside ``triangles`` (N,)."""
        v0 = self.vertices[self.triangles[triangles, 0]]
        inv = self.inverse_jacobians[triangles]
        return np.einsum("nij,nj->ni", inv, points - v0)

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Index of a triangle containing each point (closure); points outside are clamped."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.divisions
        scaled = np.clip(pts * n, 0.0, float(n))
        i = np.minimum(np.floor(scaled[:, 0]).astype(int), n - 1)
        j = np.minimum(np.floor(scaled[:, 1]).astype(int), n - 1)
        upper = (scaled[:, 1] - j) > (scaled[:, 0] - i)
        return 2 * (j * n + i) + upper.astype(int)

    def edge_points(self, ref_points: np.ndarray, edge_ids: np.ndarray | None = None) -> np.ndarray:
        """Physical points of 1D reference coordinates ``ref_points`` (q, 1) on edges: (E, q, 2)."""
        ids = np.arange(self.num_edges) if edge_ids is None else edge_ids
        a = self.vertices[self.edges[ids, 0]]
        b = self.vertices[self.edges[ids, 1]]
        s = np.asarray(ref_points, dtype=float).reshape(1, -1, 1)
        return a[:, None, :] + s * (b - a)[:, None, :]


@dataclass(frozen=True)
class BoundaryClassification:
    """Per-boundary-edge inflow/outflow labels for one velocity field.

    Attributes:
        edge_ids: (B,) boundary edge indices
        labels: (B,) one of "inflow", "outflow", "characteristic"
        fluxes: (B,) integrated beta . n_e over each edge
        separation: Minimum distance between inflow and outflow edges (inf if one set is empty)
    """

    edge_ids: np.ndarray
    labels: np.ndarray
    fluxes: np.ndarray
    separation: float
    lengths: np.ndarray

    def measure(self, label: str) -> float:
        """Total length of the edges carrying ``label``."""
        return float(self.lengths[self.labels == label].sum())

    @property
    def inflow_measure(self) -> float:
        return self.measure(INFLOW)

    @property
    def outflow_measure(self) -> float:
        return self.measure(OUTFLOW)

    def label_of(self, edge_id: int) -> str:
        idx = np.flatnonzero(self.edge_ids == edge_id)
        if idx.size == 0:
            raise InvalidArgumentError(f"edge {edge_id} is not a boundary edge")
        return str(self.labels[idx[0]])


def build_structured_mesh(n: int) -> Mesh:
    """Build the n x n diagonal-split triangulation of the unit square.

    Raises:
        InvalidArgumentError: If n < 1.
    """
    if n < 1:
        raise InvalidArgumentError(f"mesh subdivisions must be >= 1, got {n}")

    xs = np.linspace(0.0, 1.0, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (jj * (n + 1) + ii).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=int)
    triangles[0::2] = lower
    triangles[1::2] = upper

    # half-edges (a -> b) in counterclockwise order of their triangle
    half = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    owner = np.tile(np.arange(triangles.shape[0]), 3)
    keys = np.sort(half, axis=1)
    _, first, inverse, counts = np.unique(keys, axis=0, return_index=True, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    num_edges = first.shape[0]

    edges = half[first]
    edge_left = owner[first]
    edge_right = np.full(num_edges, -1, dtype=int)
    second = np.ones(half.shape[0], dtype=bool)
    second[first] = False
    edge_right[inverse[second]] = owner[second]

    a = vertices[edges[:, 0]]
    b = vertices[edges[:, 1]]
    d = b - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]

    tags = np.zeros(num_edges, dtype=int)
    boundary = counts == 1
    mid = 0.5 * (a + b)
    tol = 0.25 / n
    tags[boundary & (mid[:, 1] < tol)] = BOTTOM
    tags[boundary & (mid[:, 0] > 1.0 - tol)] = RIGHT
    tags[boundary & (mid[:, 1] > 1.0 - tol)] = TOP
    tags[boundary & (mid[:, 0] < tol)] = LEFT

    tv = vertices[triangles]
    e1 = tv[:, 1] - tv[:, 0]
    e2 = tv[:, 2] - tv[:, 0]
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    diam = np.max(
        np.stack(
            [
                np.linalg.norm(tv[:, 1] - tv[:, 0], axis=1),
                np.linalg.norm(tv[:, 2] - tv[:, 1], axis=1),
                np.linalg.norm(tv[:, 0] - tv[:, 2], axis=1),
            ]
        )
    )

    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_left=edge_left,
        edge_right=edge_right,
        edge_normals=normals,
        edge_lengths=lengths,
        boundary_tags=tags,
        areas=areas,
        h=float(diam),
        divisions=n,
    )
    logger.debug(
        "Built structured mesh n=%d: %d vertices, %d triangles, %d edges, h=%.4g",
        n,
        vertices.shape[0],
        triangles.shape[0],
        num_edges,
        mesh.h,
    )
    return mesh


def check_mesh(mesh: Mesh) -> list[str]:
    """Return violated mesh invariants (empty list = valid)."""
    errors: list[str] = []
    interior = mesh.interior_edges
    boundary = mesh.boundary_edges
    if np.any(mesh.edge_left < 0):
        errors.append("every edge needs a left triangle")
    incidence = np.bincount(mesh.edge_left, minlength=mesh.num_triangles) + np.bincount(
        mesh.edge_right[interior], minlength=mesh.num_triangles
    )
    if np.any(incidence != 3):
        errors.append("every triangle must own exactly three edges")
    if np.any(mesh.areas <= 0.0):
        errors.append("triangle areas must be strictly positive")
    if abs(mesh.areas.sum() - 1.0) > 1e-12:
        errors.append(f"areas sum to {mesh.areas.sum():.16g}, expected 1")
    euler = mesh.vertices.shape[0] - mesh.num_edges + (mesh.num_triangles + 1)
    if euler != 2:
        errors.append(f"Euler characteristic V - E + F = {euler}, expected 2")
    tv = mesh.vertices[mesh.triangles]
    diam = max(
        np.linalg.norm(tv[:, 1] - tv[:, 0], axis=1).max(),
        np.linalg.norm(tv[:, 2] - tv[:, 1], axis=1).max(),
        np.linalg.norm(tv[:, 0] - tv[:, 2], axis=1).max(),
    )
    if abs(diam - mesh.h) > 1e-14:
        errors.append(f"h={mesh.h} does not match max diameter {diam}")
    if np.any(np.abs(np.linalg.norm(mesh.edge_normals, axis=1) - 1.0) > 1e-14):
        errors.append("edge normals must be unit length")
    mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    centroids = mesh.centroids
    left_side = np.einsum("ij,ij->i", centroids[mesh.edge_left] - mid, mesh.edge_normals)
    if np.any(left_side >= 0.0):
        errors.append("left triangle must lie on the -n_e side of every edge")
    if interior.size:
        right_offset = centroids[mesh.edge_right[interior]] - mid[interior]
        right_side = np.einsum("ij,ij->i", right_offset, mesh.edge_normals[interior])
        if np.any(right_side <= 0.0):
            errors.append("right triangle must lie on the +n_e side of every interior edge")
    closure = (mesh.edge_normals[boundary] * mesh.edge_lengths[boundary, None]).sum(axis=0)
    if np.any(np.abs(closure) > 1e-12):
        errors.append(f"boundary normals do not close: {closure}")
    if np.any(mesh.boundary_tags[boundary] == INTERIOR) or np.any(mesh.boundary_tags[interior] != INTERIOR):
        errors.append("boundary tags must mark exactly the boundary edges")
    return errors


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points p (N, M, 2) to segments [a, b] broadcast the same way."""
    d = b - a
    denom = np.maximum((d * d).sum(axis=-1), 1e-300)
    t = np.clip(((p - a) * d).sum(axis=-1) / denom, 0.0, 1.0)
    proj = a + t[..., None] * d
    return np.linalg.norm(p - proj, axis=-1)


def _separation(mesh: Mesh, inflow: np.ndarray, outflow: np.ndarray) -> float:
    if inflow.size == 0 or outflow.size == 0:
        return math.inf
    ia = mesh.vertices[mesh.edges[inflow, 0]][:, None, :]
    ib = mesh.vertices[mesh.edges[inflow, 1]][:, None, :]
    oa = mesh.vertices[mesh.edges[outflow, 0]][None, :, :]
    ob = mesh.vertices[mesh.edges[outflow, 1]][None, :, :]
    candidates = [
        _segment_distance(ia, oa, ob),
        _segment_distance(ib, oa, ob),
        _segment_distance(oa, ia, ib),
        _segment_distance(ob, ia, ib),
    ]
    return float(min(c.min() for c in candidates))


def classify_boundary(
    mesh: Mesh,
    beta: Callable[[np.ndarray], np.ndarray],
    quadrature_degree: int = 8,
) -> BoundaryClassification:
    """Label boundary edges by the sign of the integral of beta . n_e.

    ``beta`` maps physical points (N, 2) to vectors (N, 2). An edge is inflow
    when the integrated flux is below -tol, outflow when above +tol and
    characteristic otherwise, with tol = 1e-12 * length * max|beta|.
    """
    rule = edge_quadrature(quadrature_degree)
    bnd = mesh.boundary_edges
    pts = mesh.edge_points(rule.points, bnd)
    values = np.asarray(beta(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)
    normal_flux = np.einsum("eqi,ei->eq", values, mesh.edge_normals[bnd])
    lengths = mesh.edge_lengths[bnd]
    fluxes = (normal_flux @ rule.weights) * lengths

    beta_max = float(np.max(np.linalg.norm(values, axis=-1))) if values.size else 0.0
    tol = 1e-12 * lengths * beta_max
    labels = np.full(bnd.shape[0], CHARACTERISTIC, dtype="<U14")
    labels[fluxes < -tol] = INFLOW
    labels[fluxes > tol] = OUTFLOW

    separation = _separation(mesh, bnd[labels == INFLOW], bnd[labels == OUTFLOW])
    if separation == 0.0:
        logger.warning("Inflow and outflow boundaries touch (separation 0); proceeding without a positive gap")
    return BoundaryClassification(
        edge_ids=bnd,
        labels=labels,
        fluxes=fluxes,
        separation=separation,
        lengths=lengths,
    )


__all__ = [
    "Mesh",
    "BoundaryClassification",
    "build_structured_mesh",
    "classify_boundary",
    "check_mesh",
    "BOUNDARY_NAMES",
    "INTERIOR",
    "BOTTOM",
    "RIGHT",
    "TOP",
    "LEFT",
    "INFLOW",
    "OUTFLOW",
    "CHARACTERISTIC",
]
