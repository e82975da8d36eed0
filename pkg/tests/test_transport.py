"""Tests for the upwind DG transport assembly and the linear solver.

Tests cover:
- Hand-derived k=0 stencil for constant beta
- Dense-factorization oracle on a small system
- Coercivity identity for exact data, a kinked datum and a measured datum
- Matrix-free evaluation of the bilinear form against the assembled matrix
- Integration-by-parts identity for continuous fields
- Accuracy and h-convergence against the exact regularized solution
- Solver paths (direct, GMRES) and error handling
"""

from __future__ import annotations

import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from conductivity_recon.core.metrics import fit_loglog, l2_error
from conductivity_recon.data import (
    AnalyticVelocity,
    DGField,
    constant_velocity,
    derive_fields,
    interpolate,
    measure,
    project_to_dg,
)
from conductivity_recon.errors import InvalidArgumentError, SolverError
from conductivity_recon.forward import manufactured_case, regularized_solution
from conductivity_recon.mesh import build_structured_mesh
from conductivity_recon.transport import (
    CoercivityTerms,
    SparseSystem,
    TransportProblem,
    apply_bilinear,
    assemble,
    coercivity_terms,
    solve,
    solve_system,
    trace_identity_defect,
)
from conductivity_recon.transport.assembly import write_matrix_market


H_STUDY_PENALTY = 1.0


def _ones(points: np.ndarray) -> np.ndarray:
    return np.ones(len(points))


def _exact_problem(n: int, k: int, eps: float, penalty: float = 100.0):
    case = manufactured_case(1)
    mesh = build_structured_mesh(n)
    velocity = AnalyticVelocity(mesh, case.grad_u, case.laplacian_u, eps, degree=5)
    return TransportProblem(velocity=velocity, inflow=case.gamma, degree=k, penalty=penalty), mesh


def _kinked_datum(mesh):
    """Piecewise quadratic with a gradient jump across x = 1/2 (a mesh line for even n)."""
    return interpolate(
        lambda p: p[:, 0] + 2.0 * np.maximum(p[:, 0] - 0.5, 0.0) + p[:, 1] ** 2 + 0.5 * p[:, 0] ** 2, mesh, 2
    )


def _random_field(mesh, k: int, rng: np.random.Generator) -> DGField:
    return DGField(mesh, k, rng.standard_normal((mesh.num_triangles, (k + 1) * (k + 2) // 2)))


# ── stencil and small oracles ──────────────────────────────────────────


class TestUpwindStencil:
    """n=1, k=0, beta=(1, 0): the two-cell system is known in closed form."""

    def test_matrix_and_rhs(self):
        eps, penalty = 0.1, 100.0
        mesh = build_structured_mesh(1)
        problem = TransportProblem(constant_velocity(mesh, eps), inflow=_ones, degree=0, penalty=penalty)
        system = assemble(problem, mesh)
        # diagonal edge: the upper triangle is on its left and the left side x=0 is inflow
        expected = np.array(
            [
                [eps / 2 + 0.5 + penalty, -0.5 - penalty],
                [0.5 - penalty, eps / 2 + 0.5 + penalty],
            ]
        )
        assert np.abs(system.matrix.toarray() - expected).max() < 1e-13
        assert np.abs(system.rhs - [0.0, 1.0]).max() < 1e-13

    def test_stencil_solution_is_damped_inflow(self):
        mesh = build_structured_mesh(1)
        problem = TransportProblem(constant_velocity(mesh, 0.1), inflow=_ones, degree=0)
        gamma = solve(assemble(problem, mesh)).coefficients.ravel()
        assert np.all(gamma < 1.0)
        assert gamma[1] > gamma[0] > 0.0


class TestDenseOracle:
    def test_small_system_matches_dense_solve(self):
        problem, mesh = _exact_problem(2, 1, 1e-3)
        system = assemble(problem, mesh)
        result = solve_system(system, tol=1e-12)
        dense = np.linalg.solve(system.matrix.toarray(), system.rhs)
        assert np.abs(result.field.vector - dense).max() / np.abs(dense).max() < 1e-10
        assert result.method == "direct"

    def test_system_layout(self):
        problem, mesh = _exact_problem(2, 2, 0.1)
        system = assemble(problem, mesh)
        assert system.size == mesh.num_triangles * 6
        assert system.block_size == 6
        assert system.dof(3, 2) == 20
        assert system.validate() == []
        assert system.to_field(np.arange(system.size, dtype=float)).coefficients[1, 0] == 6.0

    def test_zero_inflow_gives_zero_solution(self):
        case = manufactured_case(1)
        mesh = build_structured_mesh(3)
        velocity = AnalyticVelocity(mesh, case.grad_u, case.laplacian_u, 0.01)
        system = assemble(TransportProblem(velocity, inflow=lambda p: np.zeros(len(p)), degree=1), mesh)
        assert not system.rhs.any()
        assert np.allclose(solve(system).coefficients, 0.0)


# ── identities ─────────────────────────────────────────────────────────


class TestCoercivityIdentity:
    """a(w, w) = eps ||w||^2 + 1/2 int |b| w^2 + penalty |b| [w]^2 when beta . n_e is single-valued."""

    def test_exact_data_random_fields(self):
        problem, mesh = _exact_problem(16, 2, 1e-3)
        rng = np.random.default_rng(2024)
        for _ in range(100):
            terms = coercivity_terms(problem, mesh, _random_field(mesh, 2, rng))
            assert abs(terms.form - (terms.l2 + terms.boundary + terms.jump)) <= 1e-11 * abs(terms.form)
            assert terms.form >= terms.l2

    def test_smooth_polynomial_datum(self):
        mesh = build_structured_mesh(4)
        datum = interpolate(lambda p: p[:, 0] ** 2 - p[:, 1] ** 2 + 3.0 * p[:, 0], mesh, 2)
        problem = TransportProblem(derive_fields(datum, 0.01), inflow=_ones, degree=2)
        terms = coercivity_terms(problem, mesh, _random_field(mesh, 2, np.random.default_rng(1)))
        assert terms.relative_defect < 1e-12

    def test_kinked_datum_leaves_edge_remainder(self):
        # the gradient jump of 2 across x = 1/2 contributes (b_L - b_R) / 4 (w_L^2 + w_R^2) = -1 for w = 1
        mesh = build_structured_mesh(4)
        problem = TransportProblem(derive_fields(_kinked_datum(mesh), 0.05), inflow=_ones, degree=1)
        terms = coercivity_terms(problem, mesh, interpolate(_ones, mesh, 1))
        assert terms.jump == pytest.approx(0.0, abs=1e-12)
        assert terms.form - terms.predicted == pytest.approx(-1.0, abs=1e-11)

    def test_measured_datum(self):
        eps = 0.1
        mesh = build_structured_mesh(8)
        case = manufactured_case(1)
        datum = project_to_dg(measure(case.u, mesh, 5), mesh, 3)
        problem = TransportProblem(derive_fields(datum, eps), inflow=case.gamma, degree=2)
        rng = np.random.default_rng(17)
        for _ in range(20):
            terms = coercivity_terms(problem, mesh, _random_field(mesh, 2, rng))
            assert terms.form >= terms.l2 > 0.0
            assert terms.relative_defect < 1e-3

    def test_measured_datum_smooth_test_function(self):
        eps = 0.1
        mesh = build_structured_mesh(8)
        case = manufactured_case(1)
        datum = project_to_dg(measure(case.u, mesh, 5), mesh, 3)
        problem = TransportProblem(derive_fields(datum, eps), inflow=case.gamma, degree=2)
        w = interpolate(lambda p: 1.0 + p[:, 0] * p[:, 1], mesh, 2)
        terms = coercivity_terms(problem, mesh, w)
        assert terms.form >= terms.l2
        assert terms.relative_defect < 5e-2

    def test_predicted_sums_terms(self):
        terms = CoercivityTerms(form=4.0, l2=1.0, boundary=1.0, jump=1.5)
        assert terms.predicted == 3.5
        assert terms.relative_defect == pytest.approx(0.125)


class TestMatrixFree:
    def test_exact_data(self):
        problem, mesh = _exact_problem(3, 2, 1e-2)
        system = assemble(problem, mesh)
        rng = np.random.default_rng(3)
        v, w = _random_field(mesh, 2, rng), _random_field(mesh, 2, rng)
        from_matrix = float(w.vector @ (system.matrix @ v.vector))
        assert apply_bilinear(problem, mesh, v, w) == pytest.approx(from_matrix, rel=1e-11)

    def test_kinked_datum(self):
        mesh = build_structured_mesh(2)
        problem = TransportProblem(derive_fields(_kinked_datum(mesh), 0.1), inflow=_ones, degree=2, penalty=10.0)
        system = assemble(problem, mesh)
        rng = np.random.default_rng(4)
        v, w = _random_field(mesh, 2, rng), _random_field(mesh, 2, rng)
        from_matrix = float(w.vector @ (system.matrix @ v.vector))
        assert apply_bilinear(problem, mesh, v, w) == pytest.approx(from_matrix, rel=1e-11)

    def test_form_is_not_symmetric(self):
        problem, mesh = _exact_problem(2, 1, 0.1)
        rng = np.random.default_rng(5)
        v, w = _random_field(mesh, 1, rng), _random_field(mesh, 1, rng)
        assert apply_bilinear(problem, mesh, v, w) != pytest.approx(apply_bilinear(problem, mesh, w, v))

    def test_degree_mismatch(self):
        problem, mesh = _exact_problem(2, 1, 0.1)
        with pytest.raises(InvalidArgumentError):
            apply_bilinear(problem, mesh, DGField.zeros(mesh, 2), DGField.zeros(mesh, 1))


class TestTraceIdentity:
    def test_continuous_fields(self):
        mesh = build_structured_mesh(3)
        datum = interpolate(lambda p: p[:, 0] ** 2 + p[:, 0] * p[:, 1] - 0.5 * p[:, 1] ** 2 + p[:, 1], mesh, 2)
        problem = TransportProblem(derive_fields(datum, 1e-2), inflow=_ones, degree=2)
        v = interpolate(lambda p: 1.0 + p[:, 0] * p[:, 1], mesh, 2)
        w = interpolate(lambda p: p[:, 0] ** 2 - p[:, 1], mesh, 2)
        assert abs(trace_identity_defect(problem, mesh, v, w)) < 1e-12


# ── assembly arguments ─────────────────────────────────────────────────


class TestTransportProblem:
    def test_invalid_penalty(self):
        problem, mesh = _exact_problem(2, 1, 0.1, penalty=0.0)
        assert any("penalty" in p for p in problem.validate())
        with pytest.raises(InvalidArgumentError):
            assemble(problem, mesh)

    def test_quadrature_too_low(self):
        problem, mesh = _exact_problem(2, 2, 0.1)
        with pytest.raises(InvalidArgumentError):
            assemble(problem, mesh, volume_degree=2)

    def test_required_quadrature(self):
        problem, _ = _exact_problem(2, 3, 0.1)
        assert problem.required_quadrature == 2 * 3 + 5

    def test_velocity_mesh_mismatch(self):
        problem, _ = _exact_problem(2, 1, 0.1)
        with pytest.raises(InvalidArgumentError):
            assemble(problem, build_structured_mesh(3))

    def test_matrix_market_dump(self, tmp_path):
        problem, mesh = _exact_problem(2, 1, 0.1)
        system = assemble(problem, mesh)
        path = write_matrix_market(system, tmp_path / "system.mtx")
        assert path.read_text().startswith("%%MatrixMarket")
        loaded = sp.csr_matrix(scipy.io.mmread(str(path)))
        assert abs(loaded - system.matrix).max() < 1e-14


# ── solves ─────────────────────────────────────────────────────────────


class TestSolver:
    def test_gmres_matches_direct(self):
        problem, mesh = _exact_problem(4, 1, 0.01)
        system = assemble(problem, mesh)
        direct = solve_system(system, tol=1e-10, method="direct")
        iterative = solve_system(system, tol=1e-10, method="gmres")
        assert iterative.method == "gmres"
        assert iterative.residual <= 1e-10
        assert np.allclose(iterative.field.vector, direct.field.vector, atol=1e-7)

    def test_unknown_method(self):
        problem, mesh = _exact_problem(2, 0, 0.1)
        with pytest.raises(InvalidArgumentError):
            solve_system(assemble(problem, mesh), method="cg")

    def test_nonpositive_tol(self):
        problem, mesh = _exact_problem(2, 0, 0.1)
        with pytest.raises(InvalidArgumentError):
            solve_system(assemble(problem, mesh), tol=0.0)

    @pytest.mark.parametrize("method", ["direct", "gmres"])
    def test_identity_system(self, method):
        mesh = build_structured_mesh(2)
        rhs = np.arange(1.0, 25.0)
        system = SparseSystem(matrix=sp.identity(24, format="csr"), rhs=rhs, mesh=mesh, degree=1)
        result = solve_system(system, tol=1e-12, method=method)
        assert np.allclose(result.field.vector, rhs, atol=1e-12)

    def test_singular_system(self):
        mesh = build_structured_mesh(1)
        system = SparseSystem(matrix=sp.csr_matrix((2, 2)), rhs=np.ones(2), mesh=mesh, degree=0)
        with pytest.raises(SolverError):
            solve_system(system)


class TestAccuracy:
    """Discrete solution against the exact regularized solution of case 1."""

    def test_small_mesh_accuracy(self):
        eps = 1e-2
        problem, mesh = _exact_problem(8, 2, eps)
        gamma_h = solve(assemble(problem, mesh))
        case = manufactured_case(1)
        exact = lambda p: regularized_solution(case, p, eps)  # noqa: E731
        assert l2_error(exact, gamma_h) / l2_error(exact, DGField.zeros(mesh, 2)) < 1e-3

    @pytest.mark.slow
    @pytest.mark.parametrize("k", [1, 2])
    def test_h_convergence(self, k):
        # a penalty of 100 dominates the k=2 error on these meshes; 1 reaches the asymptotic rate
        eps = 1e-2
        case = manufactured_case(1)
        exact = lambda p: regularized_solution(case, p, eps)  # noqa: E731
        hs, errors = [], []
        for n in (8, 16, 32):
            problem, mesh = _exact_problem(n, k, eps, penalty=H_STUDY_PENALTY)
            hs.append(mesh.h)
            errors.append(l2_error(exact, solve(assemble(problem, mesh))))
        assert fit_loglog(hs, errors).slope >= k + 0.4
