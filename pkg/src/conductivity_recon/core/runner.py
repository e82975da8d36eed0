"""End-to-end reconstruction: data -> transport solve -> sigma_h = gamma_h^2 -> metrics.

Philosophy:
- One RunConfig fully determines a run (seeded noise, deterministic assembly)
- Each stage (data, assembly, solve, metrics) is timed and tags its failures
- The inflow datum is the exact sqrt(sigma) trace; no other interior knowledge is used
- Reports are plain dataclasses with to_dict() for JSON and csv_row() for tables

Public API:
    ReconstructionReport: Fields, metrics, timings and config echo of one run
    reconstruct: Run the pipeline for a RunConfig
    save_outputs: Write CSV/JSON/VTK/DG-CSV (and optionally Matrix Market) files
    print_report: Human-readable summary
    load_report: Read a saved report.json back as a mapping
    print_saved_report: Human-readable summary of a loaded report.json
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..basis.lagrange import MAX_DEGREE
from ..data.fields import DGField, transfer, write_field_csv
from ..data.measurement import add_noise, measure, project_to_dg, relative_data_error
from ..data.velocity import AnalyticVelocity, VelocityField, derive_fields
from ..errors import DataError, StageError
from ..forward.cases import ManufacturedCase, manufactured_case
from ..forward.elliptic import solve_elliptic
from ..mesh.structured import Mesh, build_structured_mesh, classify_boundary
from ..mesh.vtk import SAMPLE_REFERENCE_POINTS, write_field_vtk, write_mesh_vtk
from ..transport.assembly import SparseSystem, TransportProblem, assemble, write_matrix_market
from ..transport.solver import solve_system
from .config import RunConfig
from .metrics import error_halfnorm, field_minimum, rerror

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "example",
    "n",
    "data_n",
    "k",
    "k0",
    "eps",
    "delta",
    "seed",
    "penalty",
    "error_half",
    "rerror",
    "data_rel_err",
    "sep_dist",
    "assembly_ms",
    "solve_ms",
    "solver_iters",
]
TIMING_COLUMNS = ("assembly_ms", "solve_ms")
REPORT_KEYS = ("config", "data_mode", "error_half", "rerror", "timings_ms", "solver")
CENTER = np.array([[0.5, 0.5]])


@dataclass
class ReconstructionReport:
    """Result of one reconstruction."""

    config: RunConfig
    gamma: DGField
    sigma: DGField
    error_half: float
    rerror: float
    data_rel_err: float
    sep_dist: float
    inflow_measure: float
    data_mode: str
    data_ms: float
    assembly_ms: float
    solve_ms: float
    metrics_ms: float
    solver_iters: int
    solver_residual: float
    solver_method: str
    sigma_min: float
    gamma_center: float
    warnings: list[str] = field(default_factory=list)
    case_notes: dict[str, str] = field(default_factory=dict)
    system: SparseSystem | None = field(default=None, repr=False, compare=False)

    def csv_row(self) -> dict[str, Any]:
        """Values in CSV_COLUMNS order; floats keep full precision."""
        c = self.config
        return {
            "example": c.example,
            "n": c.n,
            "data_n": c.data_n,
            "k": c.k,
            "k0": c.k0,
            "eps": repr(float(c.eps)),
            "delta": repr(float(c.delta)),
            "seed": c.seed,
            "penalty": repr(float(c.penalty)),
            "error_half": repr(self.error_half),
            "rerror": repr(self.rerror),
            "data_rel_err": repr(self.data_rel_err),
            "sep_dist": repr(self.sep_dist),
            "assembly_ms": f"{self.assembly_ms:.3f}",
            "solve_ms": f"{self.solve_ms:.3f}",
            "solver_iters": self.solver_iters,
        }

    def to_dict(self) -> dict[str, Any]:
        """JSON-serializable summary (fields excluded)."""
        return {
            "config": self.config.to_dict(),
            "data_mode": self.data_mode,
            "h": round(self.config.h, 6),
            "error_half": self.error_half,
            "rerror": self.rerror,
            "data_rel_err": self.data_rel_err,
            "sep_dist": self.sep_dist if math.isfinite(self.sep_dist) else None,
            "inflow_measure": round(self.inflow_measure, 6),
            "sigma_min": self.sigma_min,
            "gamma_center": self.gamma_center,
            "timings_ms": {
                "data": round(self.data_ms, 2),
                "assembly": round(self.assembly_ms, 2),
                "solve": round(self.solve_ms, 2),
                "metrics": round(self.metrics_ms, 2),
            },
            "solver": {
                "method": self.solver_method,
                "iterations": self.solver_iters,
                "residual": self.solver_residual,
                "unknowns": int(self.gamma.coefficients.size),
            },
            "warnings": list(self.warnings),
            "case_notes": dict(self.case_notes),
        }


@contextmanager
def _stage(name: str, timings: dict[str, float]) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error("Stage %s failed: %s", name, e)
        raise StageError(name, str(e)) from e
    finally:
        timings[name] = (time.perf_counter() - start) * 1000.0


def _measured_source(config: RunConfig, case: ManufacturedCase):
    """Point evaluator of the u that is measured.

    Cases without a closed form, and cases whose data conductivity differs
    from the reconstruction target, are synthesized with degree k0 + 2
    continuous elements on a mesh twice as fine as the data mesh.
    """
    if case.case_id == 1:
        return case.u
    sigma = case.data_sigma if case.data_sigma is not None else case.sigma
    p = min(config.k0 + 2, MAX_DEGREE)
    fine = build_structured_mesh(2 * config.data_n)
    logger.info("Synthesizing u for example %d with the elliptic solver (p=%d, n=%d)", case.case_id, p, fine.divisions)
    return solve_elliptic(sigma, case.neumann, fine, p).evaluate


def _build_velocity(
    config: RunConfig, case: ManufacturedCase, mesh: Mesh, warnings: list[str]
) -> tuple[VelocityField, float]:
    mode = config.resolved_data_mode
    if mode == "exact":
        velocity = AnalyticVelocity(mesh, case.grad_u, case.laplacian_u, config.eps, degree=config.k0 + 2)
        return velocity, 0.0

    if config.k0 < 2:
        warnings.append(f"k0={config.k0}: the element-wise Laplacian of the datum vanishes")
    if case.noisy and config.delta == 0.0:
        warnings.append(f"example {case.case_id} is a noisy-data case but delta=0")
    data_mesh = mesh if config.data_n == config.n else build_structured_mesh(config.data_n)
    source = _measured_source(config, case)
    clean = measure(source, data_mesh, config.effective_measure_order)
    noisy = add_noise(clean, config.delta, config.seed, model=config.noise)
    datum = project_to_dg(noisy, data_mesh, config.k0)
    if data_mesh is not mesh:
        if config.n % config.data_n:
            warnings.append(f"n={config.n} is not a multiple of data_n={config.data_n}; datum transfer interpolates")
        datum = transfer(datum, mesh)
    return derive_fields(datum, config.eps), relative_data_error(noisy, clean)


def reconstruct(config: RunConfig, keep_system: bool = False) -> ReconstructionReport:
    """Run the full pipeline for ``config``.

    Raises:
        InvalidArgumentError: If the configuration is invalid.
        StageError: If a stage fails; ``stage`` names it and ``__cause__`` holds the original error.
    """
    config.check()
    logger.info(
        "Reconstructing example %d: n=%d, data_n=%d, k=%d, k0=%d, eps=%g, delta=%g",
        config.example,
        config.n,
        config.data_n,
        config.k,
        config.k0,
        config.eps,
        config.delta,
    )
    timings: dict[str, float] = {}
    warnings: list[str] = []
    case = manufactured_case(config.example)
    mesh = build_structured_mesh(config.n)

    with _stage("data", timings):
        velocity, data_rel_err = _build_velocity(config, case, mesh, warnings)

    with _stage("assembly", timings):
        boundary = classify_boundary(mesh, velocity)
        problem = TransportProblem(velocity=velocity, inflow=case.gamma, degree=config.k, penalty=config.penalty)
        system = assemble(problem, mesh)

    with _stage("solve", timings):
        result = solve_system(system, config.tol)

    with _stage("metrics", timings):
        gamma_h = result.field
        sigma_h = gamma_h.squared()
        err_half = error_halfnorm(case.gamma, gamma_h)
        rel = rerror(case.gamma, gamma_h)
        sigma_min = field_minimum(sigma_h)
        center = float(gamma_h.evaluate(CENTER)[0])

    for w in warnings:
        logger.warning(w)
    logger.info("Example %d: Error=%.4e, RError=%.4e (solve %.0f ms)", config.example, err_half, rel, timings["solve"])
    return ReconstructionReport(
        config=config,
        gamma=gamma_h,
        sigma=sigma_h,
        error_half=err_half,
        rerror=rel,
        data_rel_err=data_rel_err,
        sep_dist=boundary.separation,
        inflow_measure=boundary.inflow_measure,
        data_mode=config.resolved_data_mode,
        data_ms=timings["data"],
        assembly_ms=timings["assembly"],
        solve_ms=timings["solve"],
        metrics_ms=timings["metrics"],
        solver_iters=result.iterations,
        solver_residual=result.residual,
        solver_method=result.method,
        sigma_min=sigma_min,
        gamma_center=center,
        warnings=warnings,
        case_notes=dict(case.notes),
        system=system if keep_system else None,
    )


def write_csv(path: str | Path, rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> Path:
    """Write ``rows`` with a header in ``columns`` order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    return path


def save_outputs(report: ReconstructionReport, out_dir: str | Path, dump_matrix: bool = False) -> list[Path]:
    """Write results.csv, report.json, VTK and DG-CSV field dumps into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    case = manufactured_case(report.config.example)
    mesh = report.gamma.mesh
    sample_points = mesh.to_physical(SAMPLE_REFERENCE_POINTS)
    exact_sigma = case.sigma(sample_points.reshape(-1, 2)).reshape(sample_points.shape[:2])

    written = [
        write_csv(out / "results.csv", [report.csv_row()], CSV_COLUMNS),
        write_field_vtk(
            out / "gamma.vtk",
            mesh,
            {"gamma": report.gamma.vtk_samples(), "gamma_exact": np.sqrt(exact_sigma)},
            title="reconstructed gamma",
        ),
        write_field_vtk(
            out / "sigma.vtk",
            mesh,
            {"sigma": report.sigma.vtk_samples(), "sigma_exact": exact_sigma},
            title="reconstructed sigma",
        ),
        write_field_csv(report.gamma, out / "gamma_dg.csv"),
        write_field_csv(report.sigma, out / "sigma_dg.csv"),
        write_mesh_vtk(out / "mesh.vtk", mesh),
    ]
    report_path = out / "report.json"
    with open(report_path, "w") as f:
        json.dump(report.to_dict(), f, indent=2)
    written.append(report_path)
    if dump_matrix:
        if report.system is None:
            logger.warning("No assembled system kept in the report; skipping matrix dump")
        else:
            written.append(write_matrix_market(report.system, out / "system.mtx"))
    logger.info("Wrote %d output files to %s", len(written), out)
    return written


def print_report(report: ReconstructionReport) -> None:
    """Print a human-readable summary of one reconstruction."""
    c = report.config
    print("\n" + "=" * 70)
    print(f"CONDUCTIVITY RECONSTRUCTION: EXAMPLE {c.example}")
    print("=" * 70)
    print(f"Mesh: n={c.n} (h={c.h:.4f}) | data n={c.data_n} | k={c.k} | k0={c.k0} | data={report.data_mode}")
    print(f"eps={c.eps:g} | delta={c.delta:g} ({c.noise}) | seed={c.seed} | penalty={c.penalty:g}")
    print("-" * 70)
    print(f"{'Error (half-power)':<24} {report.error_half:>14.6e}")
    print(f"{'RError (relative L2)':<24} {report.rerror:>14.6e}")
    print(f"{'Data relative error':<24} {report.data_rel_err:>14.6e}")
    print(f"{'gamma_h(0.5, 0.5)':<24} {report.gamma_center:>14.6f}")
    print(f"{'min sigma_h':<24} {report.sigma_min:>14.6f}")
    print(f"{'Inflow/outflow gap':<24} {report.sep_dist:>14.6f}")
    print("-" * 70)
    print(
        f"Timings: data {report.data_ms:.0f} ms, assembly {report.assembly_ms:.0f} ms, "
        f"solve {report.solve_ms:.0f} ms ({report.solver_method}, {report.solver_iters} it)"
    )
    for w in report.warnings:
        print(f"WARNING: {w}")
    for key, note in report.case_notes.items():
        print(f"Note ({key}): {note}")



# ── saved reports ───────────────────────────────────────────────


def read_report_json(path: str | Path) -> dict[str, Any]:
    """Parse a JSON report file into a mapping.

    Raises:
        DataError: If the file is missing, not valid JSON, or not a JSON object.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"report file not found: {path}")
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise DataError(f"{path} does not hold a JSON object")
    return data


def require_keys(data: dict[str, Any], keys: Sequence[str], path: str | Path, kind: str) -> dict[str, Any]:
    missing = [k for k in keys if k not in data]
    if missing:
        raise DataError(f"{path} is not a {kind} (missing {', '.join(missing)})")
    return data


def load_report(path: str | Path) -> dict[str, Any]:
    """Read a report.json written by ``save_outputs``.

    Raises:
        DataError: If the file cannot be read or lacks one of REPORT_KEYS.
    """
    data = require_keys(read_report_json(path), REPORT_KEYS, path, "reconstruction report")
    logger.debug("Loaded reconstruction report %s", path)
    return data


def print_saved_report(data: dict[str, Any]) -> None:
    """Print a report loaded with ``load_report``."""
    c = data["config"]
    timings = data["timings_ms"]
    solver = data["solver"]
    print("\n" + "=" * 70)
    print(f"SAVED RECONSTRUCTION: EXAMPLE {c.get('example', '?')}")
    print("=" * 70)
    print(
        f"Mesh: n={c.get('n')} | data n={c.get('data_n')} | k={c.get('k')} | k0={c.get('k0')} | "
        f"data={data['data_mode']}"
    )
    print(f"eps={c.get('eps')} | delta={c.get('delta')} ({c.get('noise')}) | seed={c.get('seed')}")
    print("-" * 70)
    print(f"{'Error (half-power)':<24} {data['error_half']:>14.6e}")
    print(f"{'RError (relative L2)':<24} {data['rerror']:>14.6e}")
    for key, label in (("data_rel_err", "Data relative error"), ("gamma_center", "gamma_h(0.5, 0.5)")):
        if data.get(key) is not None:
            print(f"{label:<24} {data[key]:>14.6e}")
    if data.get("sigma_min") is not None:
        print(f"{'min sigma_h':<24} {data['sigma_min']:>14.6f}")
    print("-" * 70)
    print(
        f"Timings: assembly {timings.get('assembly', 0.0):.0f} ms, solve {timings.get('solve', 0.0):.0f} ms "
        f"({solver.get('method')}, {solver.get('iterations')} it, {solver.get('unknowns')} unknowns)"
    )
    for w in data.get("warnings", []):
        print(f"WARNING: {w}")


__all__ = [
    "ReconstructionReport",
    "reconstruct",
    "save_outputs",
    "print_report",
    "read_report_json",
    "require_keys",
    "load_report",
    "print_saved_report",
    "REPORT_KEYS",
    "write_csv",
    "CSV_COLUMNS",
    "TIMING_COLUMNS",
]
