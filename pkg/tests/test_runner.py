"""Tests for the end-to-end reconstruction pipeline.

Tests cover:
- Small exact-data and measured-data runs
- Determinism of seeded noisy runs
- Stage tagging of failures
- Output files (CSV, JSON, VTK, DG-CSV, Matrix Market) and saved-report loading
- Acceptance runs at full resolution (marked slow)
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from conductivity_recon.core.config import RunConfig
from conductivity_recon.core.metrics import fit_loglog, rerror
from conductivity_recon.core.runner import (
    CSV_COLUMNS,
    TIMING_COLUMNS,
    load_report,
    print_report,
    print_saved_report,
    reconstruct,
    save_outputs,
)
from conductivity_recon.data import read_field_csv
from conductivity_recon.errors import DataError, InvalidArgumentError, SolverError, StageError
from conductivity_recon.forward import manufactured_case

CENTER = np.array([[0.5, 0.5]])


def _small_noisy_config(**overrides) -> RunConfig:
    values = dict(example=3, n=4, data_n=4, k=1, k0=2, eps=0.1, delta=0.1, seed=7)
    values.update(overrides)
    return RunConfig(**values)


# ── pipeline ───────────────────────────────────────────────────────────


class TestReconstruct:
    def test_exact_data_run(self):
        report = reconstruct(RunConfig(example=1, n=4, k=1, eps=1e-2))
        assert report.data_mode == "exact"
        assert report.data_rel_err == 0.0
        assert report.rerror < 0.1
        assert report.error_half > 0.0
        assert report.sep_dist == 0.0
        assert report.inflow_measure == pytest.approx(1.0, abs=1e-12)
        assert report.solver_residual < 1e-8
        assert report.sigma.degree == 2
        assert report.system is None

    def test_measured_data_run(self):
        report = reconstruct(_small_noisy_config())
        assert report.data_mode == "measured"
        assert 0.0 < report.data_rel_err <= 0.1
        assert np.isfinite(report.rerror)
        assert np.isfinite(report.sigma_min)

    def test_seeded_runs_are_deterministic(self):
        first = reconstruct(_small_noisy_config()).csv_row()
        second = reconstruct(_small_noisy_config()).csv_row()
        for column in TIMING_COLUMNS:
            first.pop(column)
            second.pop(column)
        assert first == second

    def test_seed_changes_noisy_result(self):
        a = reconstruct(_small_noisy_config(seed=1))
        b = reconstruct(_small_noisy_config(seed=2))
        assert a.rerror != b.rerror

    def test_exact_data_keeps_sigma_positive(self):
        report = reconstruct(RunConfig(example=1, n=16, k=2, eps=1e-3))
        assert report.sigma_min >= 0.5 * math.exp(-0.75)

    def test_keep_system(self):
        report = reconstruct(RunConfig(example=1, n=2, k=1), keep_system=True)
        assert report.system is not None
        assert report.system.size == report.gamma.coefficients.size

    def test_invalid_config(self):
        with pytest.raises(InvalidArgumentError):
            reconstruct(RunConfig(eps=0.0))

    def test_solver_failure_names_stage(self, monkeypatch):
        def failing(*args, **kwargs):
            raise SolverError("no convergence", residual=1.0, iterations=3)

        monkeypatch.setattr("conductivity_recon.core.runner.solve_system", failing)
        with pytest.raises(StageError) as excinfo:
            reconstruct(RunConfig(example=1, n=2, k=1))
        assert excinfo.value.stage == "solve"
        assert isinstance(excinfo.value.__cause__, SolverError)
        assert str(excinfo.value).startswith("[solve]")

    def test_low_order_datum_warns(self):
        report = reconstruct(RunConfig(example=1, n=4, data_n=4, k=1, k0=1, data_mode="measured"))
        assert any("k0=1" in w for w in report.warnings)

    def test_noisy_case_without_noise_warns(self):
        report = reconstruct(_small_noisy_config(delta=0.0))
        assert any("noisy-data case" in w for w in report.warnings)

    def test_datum_transfer_between_meshes(self):
        report = reconstruct(RunConfig(example=1, n=6, data_n=4, k=1, k0=2, data_mode="measured"))
        assert report.gamma.mesh.divisions == 6
        assert any("not a multiple" in w for w in report.warnings)

    def test_case_notes_carried(self):
        report = reconstruct(RunConfig(example=4, n=4, data_n=4, k=1, k0=2))
        assert "sigma" in report.case_notes


# ── outputs ────────────────────────────────────────────────────────────


class TestOutputs:
    @pytest.fixture
    def report(self):
        return reconstruct(RunConfig(example=1, n=4, k=1, eps=1e-2), keep_system=True)

    def test_files_written(self, report, tmp_path):
        written = save_outputs(report, tmp_path, dump_matrix=True)
        names = {p.name for p in written}
        assert names == {
            "results.csv",
            "gamma.vtk",
            "sigma.vtk",
            "gamma_dg.csv",
            "sigma_dg.csv",
            "mesh.vtk",
            "report.json",
            "system.mtx",
        }
        assert all(p.exists() for p in written)

    def test_results_csv_header(self, report, tmp_path):
        save_outputs(report, tmp_path)
        with open(tmp_path / "results.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0].keys()) == CSV_COLUMNS
        assert float(rows[0]["rerror"]) == report.rerror

    def test_report_json(self, report, tmp_path):
        save_outputs(report, tmp_path)
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["data_mode"] == "exact"
        assert data["config"]["n"] == 4
        assert data["solver"]["unknowns"] == report.gamma.coefficients.size
        assert data["sep_dist"] == 0.0

    def test_dg_field_reimport_reproduces_metrics(self, report, tmp_path):
        save_outputs(report, tmp_path)
        gamma = read_field_csv(tmp_path / "gamma_dg.csv")
        case = manufactured_case(1)
        assert rerror(case.gamma, gamma) == pytest.approx(report.rerror, rel=1e-12)

    def test_matrix_dump_without_system(self, tmp_path, caplog):
        report = reconstruct(RunConfig(example=1, n=2, k=1))
        with caplog.at_level("WARNING"):
            written = save_outputs(report, tmp_path, dump_matrix=True)
        assert "system.mtx" not in {p.name for p in written}
        assert "skipping matrix dump" in caplog.text

    def test_print_report(self, report, capsys):
        print_report(report)
        out = capsys.readouterr().out
        assert "EXAMPLE 1" in out
        assert "RError" in out

    def test_saved_report_loads_and_prints(self, report, tmp_path, capsys):
        save_outputs(report, tmp_path)
        data = load_report(tmp_path / "report.json")
        assert data["rerror"] == report.rerror
        print_saved_report(data)
        out = capsys.readouterr().out
        assert "SAVED RECONSTRUCTION: EXAMPLE 1" in out
        assert "RError" in out

    def test_load_report_missing_keys(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text('{"config": {}, "rerror": 0.1}')
        with pytest.raises(DataError, match="missing data_mode"):
            load_report(path)


# ── acceptance runs ────────────────────────────────────────────────────


@pytest.mark.slow
class TestAcceptance:
    """Full-resolution reconstructions; each takes seconds to minutes."""

    @pytest.mark.parametrize(("eps", "expected"), [(1e-1, 4.31e-2), (1e-3, 4.45e-4), (1e-5, 4.46e-6)])
    def test_example1_rerror_magnitude(self, eps, expected):
        report = reconstruct(RunConfig(example=1, n=48, k=3, eps=eps))
        assert expected / 3.0 <= report.rerror <= expected * 3.0

    def test_example1_regularization_rates(self):
        eps_values = [1e-1, 1e-2, 1e-3, 1e-4]
        reports = [reconstruct(RunConfig(example=1, n=48, k=3, eps=e)) for e in eps_values]
        error_slope = fit_loglog(eps_values, [r.error_half for r in reports]).slope
        rerror_slope = fit_loglog(eps_values, [r.rerror for r in reports]).slope
        assert 0.35 <= error_slope <= 0.65
        assert 0.8 <= rerror_slope <= 1.2

    def test_example3_noisy_data(self):
        base = dict(example=3, n=24, data_n=24, k=2, k0=2, noise="element", seed=1)
        for delta in (0.1, 0.05):
            assert reconstruct(RunConfig(eps=0.01, delta=delta, **base)).rerror <= 5e-2
        coarse = reconstruct(RunConfig(eps=0.1, delta=0.1, **base))
        fine = reconstruct(RunConfig(eps=0.01, delta=0.1, **base))
        assert fine.error_half < coarse.error_half

    def test_example3_pointwise_noise(self):
        base = dict(example=3, n=24, data_n=24, k=2, k0=2, eps=0.01, seed=1)
        quiet = reconstruct(RunConfig(delta=1e-5, **base))
        loud = reconstruct(RunConfig(delta=1e-3, **base))
        assert quiet.rerror <= 5e-2
        assert loud.rerror > quiet.rerror

    def test_example2_elliptic_datum(self):
        report = reconstruct(RunConfig(example=2, n=48, data_n=48, k=3, k0=3, eps=1e-5))
        assert 3.64e-4 / 3.0 <= report.rerror <= 3.64e-4 * 3.0
        t = np.linspace(0.0, 1.0, 201)
        grid = np.column_stack([a.ravel() for a in np.meshgrid(t, t)])
        assert report.sigma_min >= 0.5 * manufactured_case(2).sigma(grid).min()

    def test_example4_inclusion_contrast(self):
        report = reconstruct(
            RunConfig(example=4, n=48, data_n=48, k=2, k0=2, eps=0.01, delta=0.1, noise="element", seed=1)
        )
        assert report.rerror <= 0.1
        center = float(report.sigma.evaluate(CENTER)[0])
        assert center == pytest.approx(2.0, abs=0.2)
        assert center - 1.0 >= 0.8
