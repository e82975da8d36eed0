"""Fast in-process property suite behind ``conductivity-recon verify``.

Each check is a small deterministic computation on tiny meshes that returns
a pass/fail flag and the measured quantity. A check that raises is recorded
as failed with the error message.

Public API:
    CheckResult: Outcome of one check
    VerificationReport: All outcomes
    CHECKS: Registered checks by name
    run_verification: Run all (or selected) checks
    print_verification: PASS/FAIL table
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..basis.lagrange import MAX_DEGREE, lagrange_basis
from ..basis.quadrature import monomial_integral, triangle_quadrature
from ..data.fields import DGField, interpolate
from ..data.velocity import AnalyticVelocity, constant_velocity, derive_fields
from ..errors import InvalidArgumentError
from ..forward.cases import manufactured_case, transport_residual
from ..forward.elliptic import solve_elliptic
from ..mesh.structured import build_structured_mesh, check_mesh
from ..transport.assembly import TransportProblem, apply_bilinear, assemble, coercivity_terms, trace_identity_defect
from ..transport.solver import solve_system

logger = logging.getLogger(__name__)

SEED = 20240601


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed_ms: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "elapsed_ms": round(self.elapsed_ms, 1),
        }


@dataclass
class VerificationReport:
    results: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "checks": [r.to_dict() for r in self.results]}


Check = Callable[[], tuple[bool, str]]


# ── checks ──────────────────────────────────────────────────────


def _check_mesh() -> tuple[bool, str]:
    problems = []
    for n in (1, 2, 5, 16):
        problems.extend(f"n={n}: {p}" for p in check_mesh(build_structured_mesh(n)))
    return not problems, "; ".join(problems[:3]) or "n in {1, 2, 5, 16} consistent"


def _check_quadrature() -> tuple[bool, str]:
    worst = 0.0
    for degree in range(0, 21):
        rule = triangle_quadrature(degree)
        x, y = rule.points[:, 0], rule.points[:, 1]
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                exact = monomial_integral(a, b)
                worst = max(worst, abs(float(rule.weights @ (x**a * y**b)) - exact) / exact)
    return worst < 1e-12, f"max relative monomial error {worst:.1e} (degree <= 20)"


def _check_basis() -> tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    pts = rng.dirichlet(np.ones(3), size=20)[:, :2]
    worst_sum = worst_kron = worst_grad = 0.0
    step = 1e-6
    for k in range(MAX_DEGREE + 1):
        basis = lagrange_basis(k)
        worst_sum = max(worst_sum, float(np.abs(basis.values(pts).sum(axis=1) - 1.0).max()))
        worst_kron = max(worst_kron, float(np.abs(basis.values(basis.nodes) - np.eye(basis.dimension)).max()))
        for axis in range(2):
            shift = np.zeros(2)
            shift[axis] = step
            fd = (basis.values(pts + shift) - basis.values(pts - shift)) / (2.0 * step)
            worst_grad = max(worst_grad, float(np.abs(fd - basis.gradients(pts)[:, :, axis]).max()))
    passed = worst_sum < 1e-10 and worst_kron < 1e-10 and worst_grad < 1e-5
    return passed, f"partition {worst_sum:.1e}, nodal {worst_kron:.1e}, FD gradient {worst_grad:.1e}"


def _check_cases() -> tuple[bool, str]:
    rng = np.random.default_rng(SEED)
    pts = rng.uniform(0.0, 1.0, size=(1000, 2))
    residual = transport_residual(manufactured_case(1), pts)
    mean2 = abs(manufactured_case(2).boundary_mean())
    lap4 = float(np.abs(manufactured_case(4).laplacian_u(pts)).max())
    passed = residual < 1e-10 and mean2 < 1e-12 and lap4 < 1e-12
    return passed, f"case 1 residual {residual:.1e}, case 2 flux mean {mean2:.1e}, case 4 Laplacian {lap4:.1e}"


def _check_elliptic() -> tuple[bool, str]:
    case = manufactured_case(1)
    mesh = build_structured_mesh(8)
    solution = solve_elliptic(case.sigma, case.neumann, mesh, 3)
    rng = np.random.default_rng(SEED)
    pts = rng.uniform(0.0, 1.0, size=(200, 2))
    u_exact = case.u(pts)
    shift = float(np.mean(u_exact - solution.evaluate(pts)))
    err = float(np.abs(solution.evaluate(pts) + shift - u_exact).max() / np.abs(u_exact).max())
    detail = f"p=3, n=8: relative max error {err:.1e}, mean {solution.mean:.1e}"
    return err < 1e-3 and abs(solution.mean) < 1e-10, detail


def _exact_problem(n: int, k: int, eps: float) -> tuple[TransportProblem, Any]:
    case = manufactured_case(1)
    mesh = build_structured_mesh(n)
    velocity = AnalyticVelocity(mesh, case.grad_u, case.laplacian_u, eps, degree=5)
    return TransportProblem(velocity=velocity, inflow=case.gamma, degree=k), mesh


def _check_coercivity() -> tuple[bool, str]:
    problem, mesh = _exact_problem(8, 2, 1e-3)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    floor_ok = True
    for _ in range(5):
        w = DGField(mesh, 2, rng.standard_normal((mesh.num_triangles, 6)))
        terms = coercivity_terms(problem, mesh, w)
        worst = max(worst, terms.relative_defect)
        floor_ok = floor_ok and terms.form >= terms.l2
    return worst < 1e-11 and floor_ok, f"max relative defect {worst:.1e} over 5 random w (k=2, n=8)"


def _check_matrix_free() -> tuple[bool, str]:
    problem, mesh = _exact_problem(3, 2, 1e-2)
    system = assemble(problem, mesh)
    rng = np.random.default_rng(SEED)
    v = DGField(mesh, 2, rng.standard_normal((mesh.num_triangles, 6)))
    w = DGField(mesh, 2, rng.standard_normal((mesh.num_triangles, 6)))
    from_matrix = float(w.vector @ (system.matrix @ v.vector))
    direct = apply_bilinear(problem, mesh, v, w)
    rel = abs(direct - from_matrix) / max(abs(from_matrix), 1e-300)
    return rel < 1e-11, f"|a(v,w) - w.Av| / |w.Av| = {rel:.1e}"


def _check_dense_oracle() -> tuple[bool, str]:
    problem, mesh = _exact_problem(2, 1, 1e-3)
    system = assemble(problem, mesh)
    result = solve_system(system, tol=1e-12)
    dense = np.linalg.solve(system.matrix.toarray(), system.rhs)
    err = float(np.abs(result.field.vector - dense).max() / np.abs(dense).max())
    return err < 1e-10, f"n=2, k=1 ({system.size} unknowns): max relative deviation {err:.1e}"


def _check_stencil() -> tuple[bool, str]:
    eps, penalty = 0.1, 100.0
    mesh = build_structured_mesh(1)
    inflow = lambda p: np.ones(len(p))  # noqa: E731
    problem = TransportProblem(constant_velocity(mesh, eps), inflow=inflow, degree=0, penalty=penalty)
    system = assemble(problem, mesh)
    # diagonal edge: upper triangle 1 on its left, n = (1, -1)/sqrt(2); left side is inflow
    expected = np.array(
        [
            [eps / 2 + 0.5 + penalty, -0.5 - penalty],
            [0.5 - penalty, eps / 2 + 0.5 + penalty],
        ]
    )
    err = float(np.abs(system.matrix.toarray() - expected).max())
    rhs_err = float(np.abs(system.rhs - np.array([0.0, 1.0])).max())
    return err < 1e-13 and rhs_err < 1e-13, f"matrix deviation {err:.1e}, rhs deviation {rhs_err:.1e}"


def _check_trace_identity() -> tuple[bool, str]:
    mesh = build_structured_mesh(3)
    datum = interpolate(lambda p: p[:, 0] ** 2 + p[:, 0] * p[:, 1] - 0.5 * p[:, 1] ** 2 + p[:, 1], mesh, 2)
    problem = TransportProblem(derive_fields(datum, 1e-2), inflow=lambda p: np.ones(len(p)), degree=2)
    v = interpolate(lambda p: 1.0 + p[:, 0] * p[:, 1], mesh, 2)
    w = interpolate(lambda p: p[:, 0] ** 2 - p[:, 1], mesh, 2)
    defect = abs(trace_identity_defect(problem, mesh, v, w))
    return defect < 1e-12, f"integration-by-parts defect {defect:.1e}"


CHECKS: dict[str, Check] = {
    "mesh invariants": _check_mesh,
    "quadrature exactness": _check_quadrature,
    "basis consistency": _check_basis,
    "manufactured oracles": _check_cases,
    "elliptic forward solve": _check_elliptic,
    "coercivity identity": _check_coercivity,
    "matrix-free form": _check_matrix_free,
    "dense oracle": _check_dense_oracle,
    "k=0 upwind stencil": _check_stencil,
    "trace identity": _check_trace_identity,
}


def run_verification(names: Sequence[str] | None = None) -> VerificationReport:
    """Run the selected checks (all by default) in registration order.

    Raises:
        InvalidArgumentError: If a name is not a registered check.
    """
    selected = list(CHECKS) if names is None else list(names)
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        raise InvalidArgumentError(f"unknown checks: {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    results = []
    for name in selected:
        start = time.perf_counter()
        try:
            passed, detail = CHECKS[name]()
        except Exception as e:  # noqa: BLE001
            logger.warning("Check %s raised: %s", name, e)
            passed, detail = False, f"{type(e).__name__}: {e}"
        elapsed = (time.perf_counter() - start) * 1000.0
        logger.info("%s: %s (%s)", name, "PASS" if passed else "FAIL", detail)
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail, elapsed_ms=elapsed))
    return VerificationReport(results=results)


def print_verification(report: VerificationReport) -> None:
    print("\n" + "=" * 70)
    print("PROPERTY SUITE")
    print("=" * 70)
    for r in report.results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name:<24} {r.detail} ({r.elapsed_ms:.0f} ms)")
    print("-" * 70)
    print(f"{len(report.results) - len(report.failures)}/{len(report.results)} checks passed")


__all__ = ["CheckResult", "VerificationReport", "CHECKS", "run_verification", "print_verification"]
