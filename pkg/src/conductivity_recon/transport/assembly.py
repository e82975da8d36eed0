"""Upwind DG discretization of beta . grad(gamma) + mu_eps gamma = 0 with weak inflow data.

Conventions: on an interior edge e with unit normal n_e pointing from the left
triangle L to the right triangle R,

    [v] = v_L - v_R,   {v} = (v_L + v_R) / 2,   b_L / b_R = one-sided beta . n_e,
    b = (b_L + b_R) / 2.

For trial v and test w the bilinear form is

    a(v, w) = sum_T  int_T mu v w + (beta . grad v) w
            + sum_int  int_e -b [v]{w} + penalty |b| [v][w]
            + sum_bnd  int_e b_minus v w,                          b_minus = max(-b, 0)

and the right-hand side is sum_bnd int_e b_minus gamma_0 w. With exact
quadrature, a single-valued beta . n_e and div(beta) = 2 (mu - eps)

    a(w, w) = eps ||w||^2 + 1/2 sum_bnd int |b| w^2 + sum_int int penalty |b| [w]^2.

A broken datum leaves an edge remainder in that identity; a(w, w) >= eps ||w||^2
is what the solver relies on.

Matrix rows are test functions, columns trial functions, both numbered
element-major: dof(t, i) = t * dim + i.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from ..basis.lagrange import MAX_DEGREE, basis_dimension, lagrange_basis
from ..basis.quadrature import QuadratureRule, edge_quadrature, triangle_quadrature
from ..data.fields import DGField
from ..data.velocity import VelocityField
from ..errors import InvalidArgumentError
from ..mesh.structured import Mesh

logger = logging.getLogger(__name__)

DEFAULT_PENALTY = 100.0


@dataclass(frozen=True)
class TransportProblem:
    """Coefficients and data of one regularized transport solve.

    Attributes:
        velocity: beta and mu_eps
        inflow: gamma_0 at physical points (N, 2)
        degree: Reconstruction degree k
        penalty: Jump penalty on |beta . n_e|
    """

    velocity: VelocityField
    inflow: Callable[[np.ndarray], np.ndarray]
    degree: int
    penalty: float = DEFAULT_PENALTY

    @property
    def eps(self) -> float:
        return self.velocity.eps

    @property
    def required_quadrature(self) -> int:
        """Lowest exactness that integrates the polynomial terms of the form exactly."""
        return 2 * self.degree + self.velocity.degree

    def validate(self) -> list[str]:
        errors = []
        if self.penalty <= 0.0:
            errors.append(f"penalty must be > 0, got {self.penalty}")
        if self.eps <= 0.0:
            errors.append(f"eps must be > 0, got {self.eps}")
        if self.degree < 0 or self.degree > MAX_DEGREE:
            errors.append(f"degree must be in [0, {MAX_DEGREE}], got {self.degree}")
        return errors

    def check(self) -> None:
        errors = self.validate()
        if errors:
            raise InvalidArgumentError("; ".join(errors))


@dataclass(frozen=True)
class SparseSystem:
    """Assembled transport system A x = b in element-major ordering."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    mesh: Mesh
    degree: int

    @property
    def block_size(self) -> int:
        return basis_dimension(self.degree)

    @property
    def size(self) -> int:
        return int(self.rhs.shape[0])

    def dof(self, triangle: int, local: int) -> int:
        return triangle * self.block_size + local

    def validate(self) -> list[str]:
        errors = []
        expected = self.mesh.num_triangles * self.block_size
        if self.matrix.shape != (expected, expected):
            errors.append(f"matrix shape {self.matrix.shape} does not match {expected} unknowns")
        if self.rhs.shape != (expected,):
            errors.append(f"rhs length {self.rhs.shape} does not match {expected} unknowns")
        empty = np.flatnonzero(self.matrix.getnnz(axis=1) == 0)
        if empty.size:
            errors.append(f"{empty.size} structurally empty rows (first: {empty[0]})")
        return errors

    def to_field(self, vector: np.ndarray) -> DGField:
        return DGField(self.mesh, self.degree, np.asarray(vector, dtype=float).reshape(-1, self.block_size))


@dataclass(frozen=True)
class CoercivityTerms:
    """Both sides of the coercivity identity for one w.

    The identity is exact for a single-valued beta . n_e; ``form >= l2`` is
    what remains for a broken datum.
    """

    form: float
    l2: float
    boundary: float
    jump: float

    @property
    def predicted(self) -> float:
        return self.l2 + self.boundary + self.jump

    @property
    def relative_defect(self) -> float:
        scale = abs(self.form) if self.form != 0.0 else 1.0
        return abs(self.form - self.predicted) / scale


# ── quadrature geometry ─────────────────────────────────────────


@dataclass(frozen=True)
class _Side:
    triangles: np.ndarray  # (E,)
    ref: np.ndarray  # (E, q, 2)
    phi: np.ndarray  # (E, q, dim)
    flux: np.ndarray  # (E, q) beta . n_e from this side


@dataclass(frozen=True)
class _Edges:
    ds: np.ndarray  # (E, q) weights times length
    points: np.ndarray  # (E, q, 2)
    left: _Side
    right: _Side | None


def _side(mesh: Mesh, problem: TransportProblem, edges: np.ndarray, triangles: np.ndarray, points: np.ndarray) -> _Side:
    q = points.shape[1]
    ref = mesh.to_reference(points.reshape(-1, 2), np.repeat(triangles, q)).reshape(points.shape)
    dim = basis_dimension(problem.degree)
    phi = lagrange_basis(problem.degree).values(ref.reshape(-1, 2)).reshape(edges.shape[0], q, dim)
    beta = problem.velocity.beta_at(ref, triangles)
    flux = np.einsum("eqc,ec->eq", beta, mesh.edge_normals[edges])
    return _Side(triangles=triangles, ref=ref, phi=phi, flux=flux)


def _edge_data(problem: TransportProblem, mesh: Mesh, rule: QuadratureRule, interior: bool) -> _Edges:
    edges = mesh.interior_edges if interior else mesh.boundary_edges
    points = mesh.edge_points(rule.points, edges)
    ds = rule.weights[None, :] * mesh.edge_lengths[edges, None]
    left = _side(mesh, problem, edges, mesh.edge_left[edges], points)
    right = _side(mesh, problem, edges, mesh.edge_right[edges], points) if interior else None
    return _Edges(ds=ds, points=points, left=left, right=right)


def _rules(
    problem: TransportProblem, volume_degree: int | None, edge_degree: int | None
) -> tuple[QuadratureRule, QuadratureRule]:
    required = problem.required_quadrature
    volume_degree = required + 1 if volume_degree is None else volume_degree
    edge_degree = required + 1 if edge_degree is None else edge_degree
    if volume_degree < required or edge_degree < required:
        raise InvalidArgumentError(
            f"quadrature exactness (volume {volume_degree}, edge {edge_degree}) "
            f"below the required 2k + deg(beta) = {required}"
        )
    return triangle_quadrature(volume_degree), edge_quadrature(edge_degree)


@dataclass(frozen=True)
class _EdgeWeights:
    mean: np.ndarray  # b
    pen: np.ndarray  # penalty |b|


def _edge_weights(problem: TransportProblem, data: _Edges) -> _EdgeWeights:
    mean = 0.5 * (data.left.flux + data.right.flux)
    return _EdgeWeights(mean=mean, pen=problem.penalty * np.abs(mean))


def _interior_coefficients(problem: TransportProblem, data: _Edges) -> dict[tuple[str, str], np.ndarray]:
    """Quadrature-weighted coefficients of the (test side, trial side) edge blocks."""
    ew = _edge_weights(problem, data)
    sign = {"L": 1.0, "R": -1.0}
    return {
        (x, y): data.ds * sign[y] * (-0.5 * ew.mean + ew.pen * sign[x])
        for x in ("L", "R")
        for y in ("L", "R")
    }


def _volume_terms(problem: TransportProblem, mesh: Mesh, rule: QuadratureRule):
    if problem.velocity.mesh is not mesh and problem.velocity.mesh.divisions != mesh.divisions:
        raise InvalidArgumentError(
            f"velocity lives on n={problem.velocity.mesh.divisions}, assembling on n={mesh.divisions}"
        )
    basis = lagrange_basis(problem.degree)
    weights = rule.weights[None, :] * (2.0 * mesh.areas)[:, None]
    beta = problem.velocity.beta_at(rule.points)
    mu = problem.velocity.mu_at(rule.points)
    return basis, weights, beta, mu


# ── assembly ────────────────────────────────────────────────────


def _block_indices(test: np.ndarray, trial: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    local = np.arange(dim)
    rows = test[:, None, None] * dim + local[None, :, None]
    cols = trial[:, None, None] * dim + local[None, None, :]
    shape = (test.shape[0], dim, dim)
    return np.broadcast_to(rows, shape).ravel(), np.broadcast_to(cols, shape).ravel()


def assemble(
    problem: TransportProblem,
    mesh: Mesh,
    volume_degree: int | None = None,
    edge_degree: int | None = None,
) -> SparseSystem:
    """Assemble the upwind DG matrix and right-hand side.

    Quadrature defaults to exactness 2k + deg(beta) + 1 on elements and edges.

    Raises:
        InvalidArgumentError: If the problem is invalid or a quadrature degree is below 2k + deg(beta).
    """
    problem.check()
    vol_rule, edge_rule = _rules(problem, volume_degree, edge_degree)
    dim = basis_dimension(problem.degree)
    n_dofs = mesh.num_triangles * dim

    basis, weights, beta, mu = _volume_terms(problem, mesh, vol_rule)
    phi = basis.values(vol_rule.points)
    grads = np.einsum("tkj,qdk->tqdj", mesh.inverse_jacobians, basis.gradients(vol_rule.points))
    advection = np.einsum("tqc,tqdc->tqd", beta, grads)
    volume = np.einsum("tq,qi,qj->tij", weights * mu, phi, phi) + np.einsum("tq,qi,tqj->tij", weights, phi, advection)

    all_tri = np.arange(mesh.num_triangles)
    blocks = [volume]
    indices = [_block_indices(all_tri, all_tri, dim)]

    inner = _edge_data(problem, mesh, edge_rule, interior=True)
    sides = {"L": inner.left, "R": inner.right}
    for (x, y), coeff in _interior_coefficients(problem, inner).items():
        blocks.append(np.einsum("eq,eqi,eqj->eij", coeff, sides[x].phi, sides[y].phi))
        indices.append(_block_indices(sides[x].triangles, sides[y].triangles, dim))

    outer = _edge_data(problem, mesh, edge_rule, interior=False)
    inflow_weight = outer.ds * np.maximum(-outer.left.flux, 0.0)
    blocks.append(np.einsum("eq,eqi,eqj->eij", inflow_weight, outer.left.phi, outer.left.phi))
    indices.append(_block_indices(outer.left.triangles, outer.left.triangles, dim))

    gamma0 = np.asarray(problem.inflow(outer.points.reshape(-1, 2)), dtype=float).reshape(inflow_weight.shape)
    local_rhs = np.einsum("eq,eqi->ei", inflow_weight * gamma0, outer.left.phi)
    rhs_index = outer.left.triangles[:, None] * dim + np.arange(dim)[None, :]
    rhs = np.bincount(rhs_index.ravel(), weights=local_rhs.ravel(), minlength=n_dofs)

    rows = np.concatenate([r for r, _ in indices])
    cols = np.concatenate([c for _, c in indices])
    values = np.concatenate([b.ravel() for b in blocks])
    matrix = sp.coo_matrix((values, (rows, cols)), shape=(n_dofs, n_dofs)).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()

    system = SparseSystem(matrix=matrix, rhs=rhs, mesh=mesh, degree=problem.degree)
    logger.info(
        "Assembled %d x %d transport system (k=%d, n=%d, %d nonzeros)",
        n_dofs,
        n_dofs,
        problem.degree,
        mesh.divisions,
        matrix.nnz,
    )
    return system


# ── matrix-free evaluation ──────────────────────────────────────


def _check_fields(problem: TransportProblem, mesh: Mesh, *fields: DGField) -> None:
    for f in fields:
        if f.degree != problem.degree:
            raise InvalidArgumentError(f"field degree {f.degree} does not match problem degree {problem.degree}")
        if f.mesh is not mesh and f.mesh.divisions != mesh.divisions:
            raise InvalidArgumentError("field lives on a different mesh")


def _trace(field: DGField, side: _Side) -> np.ndarray:
    return field.values_at(side.ref, side.triangles)


def apply_bilinear(
    problem: TransportProblem,
    mesh: Mesh,
    v: DGField,
    w: DGField,
    volume_degree: int | None = None,
    edge_degree: int | None = None,
) -> float:
    """a(v, w) by quadrature, without a matrix; v is the trial and w the test function.

    Equals ``w.vector @ (A @ v.vector)`` for the matrix from ``assemble``.

    Raises:
        InvalidArgumentError: On degree or mesh mismatch.
    """
    _check_fields(problem, mesh, v, w)
    vol_rule, edge_rule = _rules(problem, volume_degree, edge_degree)
    _, weights, beta, mu = _volume_terms(problem, mesh, vol_rule)
    vq = v.values_at(vol_rule.points)
    wq = w.values_at(vol_rule.points)
    gv = v.gradients_at(vol_rule.points)
    total = float(np.sum(weights * (mu * vq + np.einsum("tqc,tqc->tq", beta, gv)) * wq))

    inner = _edge_data(problem, mesh, edge_rule, interior=True)
    vl, vr = _trace(v, inner.left), _trace(v, inner.right)
    wl, wr = _trace(w, inner.left), _trace(w, inner.right)
    ew = _edge_weights(problem, inner)
    edge_terms = (vl - vr) * (-ew.mean * 0.5 * (wl + wr) + ew.pen * (wl - wr))
    total += float(np.sum(inner.ds * edge_terms))

    outer = _edge_data(problem, mesh, edge_rule, interior=False)
    inflow_weight = outer.ds * np.maximum(-outer.left.flux, 0.0)
    total += float(np.sum(inflow_weight * _trace(v, outer.left) * _trace(w, outer.left)))
    return total


def coercivity_terms(
    problem: TransportProblem,
    mesh: Mesh,
    w: DGField,
    volume_degree: int | None = None,
    edge_degree: int | None = None,
) -> CoercivityTerms:
    """a(w, w) next to the terms of the coercivity identity."""
    _check_fields(problem, mesh, w)
    vol_rule, edge_rule = _rules(problem, volume_degree, edge_degree)
    form = apply_bilinear(problem, mesh, w, w, vol_rule.degree, edge_rule.degree)

    weights = vol_rule.weights[None, :] * (2.0 * mesh.areas)[:, None]
    l2 = problem.eps * float(np.sum(weights * w.values_at(vol_rule.points) ** 2))

    outer = _edge_data(problem, mesh, edge_rule, interior=False)
    boundary = 0.5 * float(np.sum(outer.ds * np.abs(outer.left.flux) * _trace(w, outer.left) ** 2))

    inner = _edge_data(problem, mesh, edge_rule, interior=True)
    ew = _edge_weights(problem, inner)
    wl, wr = _trace(w, inner.left), _trace(w, inner.right)
    jumps = float(np.sum(inner.ds * ew.pen * (wl - wr) ** 2))
    return CoercivityTerms(form=form, l2=l2, boundary=boundary, jump=jumps)


def trace_identity_defect(
    problem: TransportProblem,
    mesh: Mesh,
    v: DGField,
    w: DGField,
    volume_degree: int | None = None,
    edge_degree: int | None = None,
) -> float:
    """int (beta.grad v) w + (beta.grad w) v + div(beta) v w  minus  boundary int (beta.nu) v w.

    Vanishes for globally continuous v, w and a polynomial datum with continuous beta.
    """
    _check_fields(problem, mesh, v, w)
    vol_rule, edge_rule = _rules(problem, volume_degree, edge_degree)
    _, weights, beta, mu = _volume_terms(problem, mesh, vol_rule)
    div_beta = 2.0 * (mu - problem.eps)
    vq, wq = v.values_at(vol_rule.points), w.values_at(vol_rule.points)
    gv, gw = v.gradients_at(vol_rule.points), w.gradients_at(vol_rule.points)
    volume = np.sum(
        weights
        * (np.einsum("tqc,tqc->tq", beta, gv) * wq + np.einsum("tqc,tqc->tq", beta, gw) * vq + div_beta * vq * wq)
    )
    outer = _edge_data(problem, mesh, edge_rule, interior=False)
    boundary = np.sum(outer.ds * outer.left.flux * _trace(v, outer.left) * _trace(w, outer.left))
    return float(volume - boundary)


def write_matrix_market(system: SparseSystem, path: str | Path) -> Path:
    """Dump the matrix in Matrix Market coordinate format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    comment = f"upwind DG transport, k={system.degree}, n={system.mesh.divisions}"
    scipy.io.mmwrite(str(path), system.matrix, comment=comment)
    logger.debug("Wrote %d x %d matrix to %s", system.size, system.size, path)
    return path


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
]
