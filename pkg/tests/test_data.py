"""Tests for DG fields, measurements, noise models and the transport coefficients.

Tests cover:
- DGField evaluation, squaring, transfer between meshes and CSV persistence
- Global measurement lattices and element-wise projection (exactness and rate)
- Pointwise and per-element multiplicative noise, seeding, argument checks
- beta = grad U and mu_eps = lap(U)/2 + eps for polynomial and closed-form data
"""

from __future__ import annotations

import logging

import numpy as np
import pytest

from conductivity_recon.basis import reference_lattice
from conductivity_recon.core.metrics import fit_loglog, l2_error
from conductivity_recon.data import (
    NOISE_MODELS,
    AnalyticVelocity,
    DGField,
    MeasurementSet,
    add_noise,
    constant_velocity,
    derive_fields,
    interpolate,
    measure,
    measurement_points,
    project_to_dg,
    read_field_csv,
    relative_data_error,
    transfer,
    write_field_csv,
)
from conductivity_recon.errors import DataError, InvalidArgumentError
from conductivity_recon.forward import manufactured_case
from conductivity_recon.mesh import build_structured_mesh


def _quadratic(p: np.ndarray) -> np.ndarray:
    return p[:, 0] ** 2 + p[:, 0] * p[:, 1] - 0.5 * p[:, 1] ** 2 + p[:, 1]


def _random_points(count: int, seed: int = 8) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, 1.0, size=(count, 2))


# ── DGField ────────────────────────────────────────────────────────────


class TestDGField:
    """Element-wise polynomial fields."""

    def test_interpolation_reproduces_polynomial(self):
        mesh = build_structured_mesh(3)
        field = interpolate(_quadratic, mesh, 2)
        pts = _random_points(40)
        assert np.allclose(field.evaluate(pts), _quadratic(pts), atol=1e-13)

    def test_coefficient_count(self):
        mesh = build_structured_mesh(2)
        assert interpolate(_quadratic, mesh, 3).coefficients.shape == (8, 10)

    def test_shape_mismatch(self):
        mesh = build_structured_mesh(2)
        with pytest.raises(InvalidArgumentError):
            DGField(mesh, 2, np.zeros((8, 3)))

    def test_evaluation_is_local(self):
        mesh = build_structured_mesh(2)
        coeffs = np.zeros((mesh.num_triangles, 3))
        coeffs[5] = 7.0
        field = DGField(mesh, 1, coeffs)
        assert field.evaluate(mesh.centroids[5:6])[0] == pytest.approx(7.0)
        assert np.allclose(field.evaluate(np.delete(mesh.centroids, 5, axis=0)), 0.0)

    def test_vector_is_element_major(self):
        mesh = build_structured_mesh(1)
        field = DGField(mesh, 1, np.arange(6, dtype=float).reshape(2, 3))
        assert field.vector.tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_gradients_of_linear_field(self):
        mesh = build_structured_mesh(3)
        field = interpolate(lambda p: 2.0 * p[:, 0] - 3.0 * p[:, 1], mesh, 1)
        grads = field.gradients_at(np.array([[0.2, 0.2]]))
        assert np.allclose(grads[..., 0], 2.0)
        assert np.allclose(grads[..., 1], -3.0)

    def test_hessians_of_quadratic(self):
        mesh = build_structured_mesh(2)
        hess = interpolate(_quadratic, mesh, 2).hessians_at(np.array([[0.3, 0.3]]))
        assert np.allclose(hess[:, 0], [[2.0, 1.0], [1.0, -1.0]])

    def test_squared(self):
        mesh = build_structured_mesh(2)
        field = interpolate(lambda p: 1.0 + p[:, 0] - p[:, 1], mesh, 1)
        sq = field.squared()
        pts = _random_points(20)
        assert sq.degree == 2
        assert np.allclose(sq.evaluate(pts), field.evaluate(pts) ** 2, atol=1e-13)

    def test_squared_caps_degree(self):
        mesh = build_structured_mesh(1)
        assert interpolate(_quadratic, mesh, 4).squared().degree == 6

    def test_zeros(self):
        field = DGField.zeros(build_structured_mesh(2), 2)
        assert field.coefficients.shape == (8, 6)
        assert not field.coefficients.any()


class TestTransfer:
    def test_same_mesh_is_identity(self):
        mesh = build_structured_mesh(2)
        field = interpolate(_quadratic, mesh, 2)
        assert transfer(field, mesh) is field

    def test_refinement_is_exact_for_broken_field(self):
        coarse = build_structured_mesh(3)
        fine = build_structured_mesh(6)
        rng = np.random.default_rng(1)
        field = DGField(coarse, 2, rng.standard_normal((coarse.num_triangles, 6)))
        moved = transfer(field, fine)
        # sample well inside the fine triangles, away from coarse edges
        inner = fine.to_physical(np.array([[0.25, 0.25]])).reshape(-1, 2)
        assert np.allclose(moved.evaluate(inner), field.evaluate(inner), atol=1e-12)

    def test_polynomial_survives_coarsening(self):
        moved = transfer(interpolate(_quadratic, build_structured_mesh(6), 2), build_structured_mesh(3))
        pts = _random_points(30)
        assert np.allclose(moved.evaluate(pts), _quadratic(pts), atol=1e-12)


class TestFieldCsv:
    """write_field_csv / read_field_csv."""

    def test_round_trip_is_exact(self, tmp_path):
        mesh = build_structured_mesh(3)
        rng = np.random.default_rng(2)
        field = DGField(mesh, 2, rng.standard_normal((mesh.num_triangles, 6)))
        path = write_field_csv(field, tmp_path / "field.csv")
        loaded = read_field_csv(path)
        assert loaded.degree == 2
        assert loaded.mesh.divisions == 3
        assert np.array_equal(loaded.coefficients, field.coefficients)

    def test_header(self, tmp_path):
        mesh = build_structured_mesh(1)
        path = write_field_csv(interpolate(_quadratic, mesh, 1), tmp_path / "f.csv")
        lines = path.read_text().splitlines()
        assert lines[:3] == ["# degree=1", "# n=1", "# basis=lagrange-uniform"]
        assert lines[3] == "triangle_id,coeff_0,coeff_1,coeff_2"

    def test_mesh_mismatch(self, tmp_path):
        path = write_field_csv(interpolate(_quadratic, build_structured_mesh(2), 1), tmp_path / "f.csv")
        with pytest.raises(DataError):
            read_field_csv(path, build_structured_mesh(3))

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("triangle_id,coeff_0\n0,1.0\n")
        with pytest.raises(DataError):
            read_field_csv(path)

    def test_truncated_body(self, tmp_path):
        path = write_field_csv(interpolate(_quadratic, build_structured_mesh(2), 1), tmp_path / "f.csv")
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(DataError):
            read_field_csv(path)


# ── measurements and projection ────────────────────────────────────────


class TestMeasurement:
    def test_shared_points_are_merged(self):
        points, index = measurement_points(build_structured_mesh(2), 2)
        assert points.shape == (25, 2)
        assert index.shape == (8, 6)
        assert index.max() == 24

    def test_centroid_measurements(self):
        mesh = build_structured_mesh(3)
        points, index = measurement_points(mesh, 0)
        assert points.shape == (mesh.num_triangles, 2)
        assert np.allclose(points, mesh.centroids)

    def test_element_values(self):
        mesh = build_structured_mesh(2)
        data = measure(_quadratic, mesh, 2)
        assert isinstance(data, MeasurementSet)
        expected = _quadratic(mesh.to_physical(reference_lattice(2)).reshape(-1, 2)).reshape(8, 6)
        assert np.allclose(data.element_values, expected)

    def test_order_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            measurement_points(build_structured_mesh(2), 7)


class TestProjectToDg:
    """Element-wise interpolation / least-squares fits."""

    def test_reproduces_quadratic(self):
        mesh = build_structured_mesh(4)
        datum = project_to_dg(lambda p: p[:, 0] ** 2 + p[:, 1], mesh, 2)
        exact = interpolate(lambda p: p[:, 0] ** 2 + p[:, 1], mesh, 2)
        assert np.abs(datum.coefficients - exact.coefficients).max() < 1e-12

    def test_least_squares_with_extra_points(self):
        mesh = build_structured_mesh(3)
        data = measure(_quadratic, mesh, 4)
        datum = project_to_dg(data, mesh, 2)
        pts = _random_points(25)
        assert np.allclose(datum.evaluate(pts), _quadratic(pts), atol=1e-12)

    def test_from_dg_field(self):
        mesh = build_structured_mesh(2)
        field = interpolate(_quadratic, mesh, 3)
        datum = project_to_dg(field, mesh, 2)
        pts = _random_points(10)
        assert np.allclose(datum.evaluate(pts), _quadratic(pts), atol=1e-12)

    def test_projection_rate(self):
        hs, errors = [], []
        for n in (8, 16, 32):
            mesh = build_structured_mesh(n)
            hs.append(mesh.h)
            errors.append(l2_error(lambda p: np.exp(p[:, 0]), project_to_dg(lambda p: np.exp(p[:, 0]), mesh, 2)))
        assert fit_loglog(hs, errors).slope == pytest.approx(3.0, abs=0.3)

    def test_projection_is_idempotent(self):
        mesh = build_structured_mesh(4)
        once = project_to_dg(measure(lambda p: np.exp(p[:, 0]) * np.cos(p[:, 1]), mesh, 5), mesh, 3)
        twice = project_to_dg(once, mesh, 3)
        assert np.abs(twice.coefficients - once.coefficients).max() < 1e-12

    def test_least_squares_averages_pointwise_noise(self):
        mesh = build_structured_mesh(8)
        exact = interpolate(_quadratic, mesh, 2)
        errors = {}
        for order in (2, 6):
            noisy = add_noise(measure(_quadratic, mesh, order), 0.1, seed=11)
            errors[order] = l2_error(exact.evaluate, project_to_dg(noisy, mesh, 2))
        assert 0.0 < errors[6] < 0.8 * errors[2]

    def test_too_few_points(self):
        mesh = build_structured_mesh(2)
        with pytest.raises(DataError):
            project_to_dg(measure(_quadratic, mesh, 1), mesh, 2)

    def test_measurement_mesh_mismatch(self):
        data = measure(_quadratic, build_structured_mesh(2), 2)
        with pytest.raises(DataError):
            project_to_dg(data, build_structured_mesh(4), 2)

    def test_low_degree_warns(self, caplog):
        mesh = build_structured_mesh(2)
        with caplog.at_level(logging.WARNING, logger="conductivity_recon.data.measurement"):
            project_to_dg(_quadratic, mesh, 1)
        assert any("piecewise-zero Laplacian" in r.message for r in caplog.records)


# ── noise ──────────────────────────────────────────────────────────────


class TestAddNoise:
    """U = u (1 + delta xi) with xi ~ U(-1, 1)."""

    def _data(self) -> MeasurementSet:
        return measure(lambda p: 1.0 + p[:, 0], build_structured_mesh(4), 2)

    def test_models(self):
        assert NOISE_MODELS == ("pointwise", "element")

    def test_zero_delta_is_identity(self):
        data = self._data()
        assert add_noise(data, 0.0, seed=1) is data

    def test_pointwise_bounds(self):
        data = self._data()
        noisy = add_noise(data, 0.1, seed=3)
        ratio = noisy.values / data.values
        assert np.all(np.abs(ratio - 1.0) <= 0.1 + 1e-15)
        assert np.unique(np.round(ratio, 12)).size > 1

    def test_element_gain_is_shared_within_triangle(self):
        data = self._data()
        noisy = add_noise(data, 0.1, seed=3, model="element")
        ratio = noisy.element_values / data.element_values
        assert np.allclose(ratio, ratio[:, :1])
        assert np.all(np.abs(ratio - 1.0) <= 0.1 + 1e-15)
        assert np.unique(np.round(ratio[:, 0], 12)).size > 1
        assert noisy.points.shape[0] == data.element_points.size

    def test_element_gain_keeps_coefficient_ratio(self):
        # a per-triangle gain scales grad U and lap U together
        mesh = build_structured_mesh(4)
        clean = measure(lambda p: 1.0 + p[:, 0] ** 2 + p[:, 1], mesh, 2)
        noisy = add_noise(clean, 0.1, seed=5, model="element")
        ref = np.array([[1.0 / 3.0, 1.0 / 3.0], [0.2, 0.6]])
        ratios = []
        for data in (clean, noisy):
            velocity = derive_fields(project_to_dg(data, mesh, 2), 0.0)
            ratios.append(velocity.mu_at(ref) / np.linalg.norm(velocity.beta_at(ref), axis=-1))
        assert np.allclose(ratios[0], ratios[1], rtol=1e-12)
        assert relative_data_error(noisy, clean) > 0.0

    def test_dg_field_element_gain(self):
        field = interpolate(lambda p: 2.0 + p[:, 1], build_structured_mesh(2), 2)
        ratio = add_noise(field, 0.2, seed=1, model="element").coefficients / field.coefficients
        assert np.allclose(ratio, ratio[:, :1])

    def test_seed_reproducibility(self):
        data = self._data()
        a = add_noise(data, 0.05, seed=7)
        b = add_noise(data, 0.05, seed=7)
        c = add_noise(data, 0.05, seed=8)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_dg_field_input(self):
        field = interpolate(lambda p: 2.0 + p[:, 1], build_structured_mesh(2), 2)
        noisy = add_noise(field, 0.2, seed=1)
        assert isinstance(noisy, DGField)
        assert np.all(np.abs(noisy.coefficients / field.coefficients - 1.0) <= 0.2 + 1e-15)

    def test_relative_error_bounded_by_delta(self):
        data = self._data()
        noisy = add_noise(data, 0.1, seed=4)
        assert 0.0 < relative_data_error(noisy, data) <= 0.1

    def test_negative_delta(self):
        with pytest.raises(InvalidArgumentError):
            add_noise(self._data(), -0.1, seed=1)

    def test_unknown_model(self):
        with pytest.raises(InvalidArgumentError):
            add_noise(self._data(), 0.1, seed=1, model="gaussian")

    def test_unsupported_input(self):
        with pytest.raises(InvalidArgumentError):
            add_noise(np.ones(3), 0.1, seed=1)


# ── transport coefficients ─────────────────────────────────────────────


class TestVelocityFields:
    """beta and mu_eps from a polynomial datum and from closed forms."""

    def test_polynomial_datum(self):
        mesh = build_structured_mesh(3)
        velocity = derive_fields(interpolate(_quadratic, mesh, 2), eps=0.01)
        ref = np.array([[0.2, 0.3], [0.6, 0.1]])
        pts = mesh.to_physical(ref)
        beta = velocity.beta_at(ref)
        assert np.allclose(beta[..., 0], 2.0 * pts[..., 0] + pts[..., 1])
        assert np.allclose(beta[..., 1], pts[..., 0] - pts[..., 1] + 1.0)
        assert np.allclose(velocity.mu_at(ref), 0.5 * (2.0 - 1.0) + 0.01)
        assert velocity.degree == 1
        assert velocity.exact_divergence

    def test_gradient_matches_differences(self):
        mesh = build_structured_mesh(2)
        datum = interpolate(lambda p: np.sin(p[:, 0]) * np.exp(p[:, 1]), mesh, 4)
        velocity = derive_fields(datum, eps=0.1)
        pts = mesh.centroids
        step = 1e-6
        fd = np.column_stack(
            [
                (datum.evaluate(pts + [step, 0.0]) - datum.evaluate(pts - [step, 0.0])) / (2 * step),
                (datum.evaluate(pts + [0.0, step]) - datum.evaluate(pts - [0.0, step])) / (2 * step),
            ]
        )
        assert np.allclose(velocity(pts), fd, atol=1e-7)

    def test_linear_datum_has_zero_laplacian(self):
        mesh = build_structured_mesh(2)
        velocity = derive_fields(interpolate(lambda p: p[:, 0], mesh, 1), eps=0.3)
        assert np.allclose(velocity.mu_at(np.array([[0.1, 0.1]])), 0.3)

    def test_analytic_velocity(self):
        case = manufactured_case(1)
        mesh = build_structured_mesh(2)
        velocity = AnalyticVelocity(mesh, case.grad_u, case.laplacian_u, eps=0.001)
        ref = np.array([[0.25, 0.25]])
        pts = mesh.to_physical(ref).reshape(-1, 2)
        assert np.allclose(velocity.beta_at(ref).reshape(-1, 2), case.grad_u(pts))
        assert np.allclose(velocity.mu_at(ref).ravel(), 0.5 * case.laplacian_u(pts) + 0.001)
        assert not velocity.exact_divergence

    def test_constant_velocity(self):
        mesh = build_structured_mesh(2)
        velocity = constant_velocity(mesh, 0.2, direction=(0.0, 2.0))
        ref = np.array([[0.1, 0.2], [0.3, 0.3]])
        assert np.allclose(velocity.beta_at(ref), [0.0, 2.0])
        assert np.allclose(velocity.mu_at(ref), 0.2)
        assert velocity.degree == 0
