"""Tests for the reconstruction error metrics and log-log slope fits."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conductivity_recon.core.metrics import (
    composite_rule,
    error_halfnorm,
    field_minimum,
    fit_loglog,
    l2_error,
    rerror,
)
from conductivity_recon.data import DGField, interpolate
from conductivity_recon.errors import InvalidArgumentError
from conductivity_recon.mesh import build_structured_mesh


def _constant(value: float):
    return lambda p: np.full(len(p), value)


def _smooth(p: np.ndarray) -> np.ndarray:
    return 1.0 + 0.3 * np.sin(3.0 * p[:, 0]) * np.cos(2.0 * p[:, 1])


class TestCompositeRule:
    def test_weights_sum_to_reference_area(self):
        _, weights = composite_rule()
        assert weights.sum() == pytest.approx(0.5, abs=1e-14)

    def test_points_inside_reference_triangle(self):
        points, _ = composite_rule(3, 4)
        assert np.all(points >= 0.0)
        assert np.all(points.sum(axis=1) <= 1.0 + 1e-14)

    def test_invalid_refinement(self):
        with pytest.raises(InvalidArgumentError):
            composite_rule(0, 4)


class TestErrorHalfnorm:
    """Integral of |gamma - gamma_h|^(1/2)."""

    def test_identical_fields(self):
        mesh = build_structured_mesh(3)
        approx = interpolate(lambda p: 1.0 + p[:, 0], mesh, 1)
        assert error_halfnorm(lambda p: 1.0 + p[:, 0], approx) == pytest.approx(0.0, abs=1e-6)

    def test_constant_difference(self):
        mesh = build_structured_mesh(2)
        approx = DGField(mesh, 0, np.ones((mesh.num_triangles, 1)))
        assert error_halfnorm(_constant(1.04), approx) == pytest.approx(0.2, rel=1e-12)

    def test_matches_refined_oracle(self):
        mesh = build_structured_mesh(2)
        approx = DGField(mesh, 0, np.full((mesh.num_triangles, 1), 0.5))
        exact = lambda p: 0.7 + 0.1 * np.sin(3.0 * p[:, 0]) * np.cos(2.0 * p[:, 1])  # noqa: E731
        reference = error_halfnorm(exact, approx, refine=40)
        assert error_halfnorm(exact, approx) == pytest.approx(reference, rel=1e-4)

    def test_nonnegative(self):
        mesh = build_structured_mesh(2)
        approx = interpolate(lambda p: p[:, 0] - p[:, 1], mesh, 1)
        assert error_halfnorm(_smooth, approx) >= 0.0


class TestRError:
    """||gamma - gamma_h|| / ||gamma||."""

    def test_identical_fields(self):
        mesh = build_structured_mesh(2)
        approx = interpolate(lambda p: 2.0 + p[:, 1], mesh, 1)
        assert rerror(lambda p: 2.0 + p[:, 1], approx) == pytest.approx(0.0, abs=1e-14)

    def test_constants(self):
        mesh = build_structured_mesh(2)
        approx = DGField(mesh, 0, np.ones((mesh.num_triangles, 1)))
        assert rerror(_constant(2.0), approx) == pytest.approx(0.5, rel=1e-12)

    def test_matches_refined_oracle(self):
        mesh = build_structured_mesh(3)
        approx = interpolate(_smooth, mesh, 1)
        assert rerror(_smooth, approx) == pytest.approx(rerror(_smooth, approx, refine=12, degree=14), rel=1e-6)

    def test_zero_exact_field(self):
        mesh = build_structured_mesh(1)
        with pytest.raises(InvalidArgumentError):
            rerror(_constant(0.0), DGField.zeros(mesh, 0))

    def test_l2_error_of_constants(self):
        mesh = build_structured_mesh(2)
        approx = DGField(mesh, 0, np.ones((mesh.num_triangles, 1)))
        assert l2_error(_constant(3.0), approx) == pytest.approx(2.0, rel=1e-12)


class TestFieldMinimum:
    def test_linear_field(self):
        mesh = build_structured_mesh(4)
        field = interpolate(lambda p: 1.0 + p[:, 0] + p[:, 1], mesh, 1)
        minimum = field_minimum(field)
        assert 1.0 <= minimum < 1.1


class TestFitLoglog:
    def test_exact_power_law(self):
        x = [1e-1, 1e-2, 1e-3, 1e-4]
        fit = fit_loglog(x, [3.0 * v**0.5 for v in x])
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log10(3.0), abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.points == 4

    def test_caption_values_give_unit_slope(self):
        fit = fit_loglog([1e-1, 1e-3, 1e-5], [4.31e-2, 4.45e-4, 4.46e-6])
        assert fit.slope == pytest.approx(1.0, abs=0.01)

    def test_to_dict(self):
        fit = fit_loglog([1.0, 2.0, 4.0], [1.0, 4.0, 16.0])
        assert fit.to_dict() == {"slope": 2.0, "intercept": 0.0, "r2": 1.0, "points": 3}

    def test_too_few_points(self):
        with pytest.raises(InvalidArgumentError):
            fit_loglog([1.0, 2.0], [1.0, 2.0])

    def test_nonpositive_values(self):
        with pytest.raises(InvalidArgumentError):
            fit_loglog([1.0, 2.0, 3.0], [1.0, 0.0, 2.0])
