"""Continuous Galerkin solver for the Neumann problem div(sigma grad u) = 0, sigma d_nu u = g.

The zero-mean normalization is imposed with one scalar Lagrange multiplier,
giving the symmetric saddle-point system

    [ K   c ] [u]   [f]
    [ c^T 0 ] [l] = [0],   c_i = integral of phi_i.

Global degrees of freedom are the degree-p lattice points of the structured
mesh, identified through their integer lattice coordinates.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..basis.lagrange import MAX_DEGREE, lagrange_basis, reference_lattice
from ..basis.quadrature import edge_quadrature, triangle_quadrature
from ..data.fields import DGField
from ..errors import DataError, InvalidArgumentError, SolverError
from ..mesh.structured import Mesh

logger = logging.getLogger(__name__)

COMPATIBILITY_TOL = 1e-8
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class EllipticSolution:
    """Degree-p continuous solution on ``mesh``.

    Attributes:
        mesh: Mesh of the solve
        degree: Polynomial degree p
        element_dofs: (T, dim) global dof index of every element node
        values: (N,) nodal values
        multiplier: Lagrange multiplier of the mean constraint
        mean: Integral of u_h over the domain after the solve
        residual: Relative residual of the saddle-point system
    """

    mesh: Mesh
    degree: int
    element_dofs: np.ndarray
    values: np.ndarray
    multiplier: float
    mean: float
    residual: float

    @property
    def num_dofs(self) -> int:
        return int(self.values.shape[0])

    @cached_property
    def field(self) -> DGField:
        return DGField(self.mesh, self.degree, self.values[self.element_dofs])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.field.evaluate(points)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)


def _global_dofs(mesh: Mesh, p: int) -> tuple[np.ndarray, int]:
    nodes = mesh.to_physical(reference_lattice(p))
    m = p * mesh.divisions
    lattice = np.rint(nodes * m).astype(np.int64)
    keys = lattice[..., 0] * (m + 1) + lattice[..., 1]
    unique, inverse = np.unique(keys.ravel(), return_inverse=True)
    return inverse.reshape(keys.shape), int(unique.shape[0])


def solve_elliptic(
    sigma: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    mesh: Mesh,
    p: int,
) -> EllipticSolution:
    """Solve the Neumann problem with degree-``p`` continuous elements.

    Args:
        sigma: Conductivity at points (N, 2)
        g: Boundary flux at points (N, 2) with outward normals (N, 2)
        mesh: Structured mesh
        p: Polynomial degree, 1..MAX_DEGREE

    Raises:
        InvalidArgumentError: If p is out of range.
        DataError: If the integral of g over the boundary exceeds 1e-8 or sigma is not positive.
        SolverError: If the factorization fails or leaves a residual above 1e-10.
    """
    if p < 1 or p > MAX_DEGREE:
        raise InvalidArgumentError(f"elliptic degree must be in [1, {MAX_DEGREE}], got {p}")

    basis = lagrange_basis(p)
    element_dofs, num_dofs = _global_dofs(mesh, p)
    dim = basis.dimension

    rule = triangle_quadrature(2 * p + 2)
    weights = rule.weights[None, :] * (2.0 * mesh.areas)[:, None]
    xq = mesh.to_physical(rule.points)
    sig = np.asarray(sigma(xq.reshape(-1, 2)), dtype=float).reshape(weights.shape)
    if not np.all(sig > 0.0):
        raise DataError(f"conductivity must be positive at quadrature points (min {sig.min():.3g})")
    grads = np.einsum("tkj,qdk->tqdj", mesh.inverse_jacobians, basis.gradients(rule.points))
    local_k = np.einsum("tq,tqdj,tqej->tde", weights * sig, grads, grads)
    local_c = weights @ basis.values(rule.points)

    erule = edge_quadrature(2 * p + 4)
    bnd = mesh.boundary_edges
    pts = mesh.edge_points(erule.points, bnd)
    normals = np.repeat(mesh.edge_normals[bnd], erule.size, axis=0)
    ds = erule.weights[None, :] * mesh.edge_lengths[bnd, None]
    gvals = np.asarray(g(pts.reshape(-1, 2), normals), dtype=float).reshape(ds.shape)
    total_flux = float(np.sum(ds * gvals))
    if abs(total_flux) > COMPATIBILITY_TOL:
        raise DataError(f"incompatible Neumann datum: boundary integral of g is {total_flux:.3e}")
    left = mesh.edge_left[bnd]
    ref = mesh.to_reference(pts.reshape(-1, 2), np.repeat(left, erule.size))
    phi_edge = basis.values(ref).reshape(bnd.shape[0], erule.size, dim)
    local_f = np.einsum("bq,bqd->bd", ds * gvals, phi_edge)

    rows = np.broadcast_to(element_dofs[:, :, None], local_k.shape).ravel()
    cols = np.broadcast_to(element_dofs[:, None, :], local_k.shape).ravel()
    stiffness = sp.coo_matrix((local_k.ravel(), (rows, cols)), shape=(num_dofs, num_dofs)).tocsr()
    c = np.bincount(element_dofs.ravel(), weights=local_c.ravel(), minlength=num_dofs)
    f = np.bincount(element_dofs[left].ravel(), weights=local_f.ravel(), minlength=num_dofs)

    system = sp.bmat(
        [[stiffness, sp.csr_matrix(c[:, None])], [sp.csr_matrix(c[None, :]), None]],
        format="csc",
    )
    rhs = np.concatenate([f, [0.0]])
    logger.debug("Elliptic system: p=%d, n=%d, %d dofs", p, mesh.divisions, num_dofs)

    try:
        solution = spsolve(system, rhs, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as e:
        raise SolverError(f"elliptic factorization failed: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise SolverError("elliptic system is singular (non-finite solution)")
    b_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(system @ solution - rhs)) / b_norm if b_norm > 0.0 else 0.0
    if residual > RESIDUAL_TOL:
        raise SolverError(f"elliptic residual {residual:.3e} above {RESIDUAL_TOL:g}", residual=residual, iterations=1)

    values = solution[:num_dofs]
    mean = float(c @ values)
    logger.info(
        "Solved elliptic forward problem (p=%d, n=%d, %d dofs, residual %.2e)", p, mesh.divisions, num_dofs, residual
    )
    return EllipticSolution(
        mesh=mesh,
        degree=p,
        element_dofs=element_dofs,
        values=values,
        multiplier=float(solution[-1]),
        mean=mean,
        residual=residual,
    )


__all__ = ["EllipticSolution", "solve_elliptic", "COMPATIBILITY_TOL"]
