from __future__ import annotations

import numpy as np
import pytest

from mflab.core.errors import SpecValidationError
from mflab.core.models import Branch, MapFamily
from mflab.dynamics.map_family import (
    branch_inverse,
    build_map_spec,
    eval_derivative,
    eval_map,
    gamma_bounds,
    lifted_derivative,
    lifted_map,
)


def test_unperturbed_branch_boundary_solves_lifted_equation() -> None:
    spec = build_map_spec("coupled", 0.5, 0.0)

    assert 0.0 < spec.boundary < 1.0
    assert lifted_map(spec, spec.boundary) == pytest.approx(1.0, abs=1e-12)
    assert spec.exponent == 0.5
    assert spec.perturbation == 0.0


def test_coupling_moves_exponent_and_perturbation() -> None:
    coupled = build_map_spec(MapFamily.COUPLED_PM, 0.5, 0.05, s_h=0.4, c_h=-0.2)
    remark = build_map_spec(MapFamily.REMARK_PM, 0.5, 0.05, s_h=0.4, c_h=0.7)

    assert coupled.exponent == pytest.approx(0.52)
    assert coupled.perturbation == pytest.approx(-0.01)
    assert remark.exponent == 0.5
    assert remark.perturbation == pytest.approx(0.02)
    assert remark.c_h == 0.0


def test_eval_map_returns_float_for_scalars_and_reduces_mod_one() -> None:
    spec = build_map_spec("coupled", 0.5, 0.05, s_h=0.3, c_h=-0.4)

    assert eval_map(spec, 0.0) == 0.0
    assert isinstance(eval_map(spec, 0.3), float)
    values = eval_map(spec, np.linspace(0.0, 0.999, 200))
    assert np.all((values >= 0.0) & (values < 1.0))


def test_branch_inverses_hit_their_targets() -> None:
    spec = build_map_spec("coupled", 0.4, 0.05, s_h=-0.3, c_h=0.6)
    y = np.linspace(0.001, 0.999, 101)

    left = branch_inverse(spec, Branch.LEFT, y)
    right = branch_inverse(spec, "right", y)

    np.testing.assert_allclose(lifted_map(spec, left), y, rtol=1e-12)
    np.testing.assert_allclose(lifted_map(spec, right), y + 1.0, rtol=1e-12)
    assert np.all(left <= spec.boundary)
    assert np.all(right >= spec.boundary)


def test_left_inverse_keeps_relative_accuracy_near_zero() -> None:
    spec = build_map_spec("remark", 0.5, 0.05, s_h=0.8)
    y = np.array([1e-12, 1e-9, 1e-6])

    left = branch_inverse(spec, Branch.LEFT, y)

    np.testing.assert_allclose(lifted_map(spec, left), y, rtol=1e-10)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_derivatives_match_central_differences(order: int) -> None:
    spec = build_map_spec("coupled", 0.5, 0.05, s_h=0.3, c_h=-0.4)
    x = np.array([0.2, 0.45, 0.8])
    step = 1e-6

    below = lifted_derivative(spec, x - step, order - 1)
    above = lifted_derivative(spec, x + step, order - 1)
    expected = (above - below) / (2.0 * step)

    np.testing.assert_allclose(lifted_derivative(spec, x, order), expected, rtol=1e-5)


def test_eval_derivative_of_scalar_is_float() -> None:
    spec = build_map_spec("coupled", 0.5, 0.0)

    assert eval_derivative(spec, 0.25, 1) == pytest.approx(1.0 + 1.5 * 0.5)


def test_unsupported_derivative_order_is_rejected() -> None:
    spec = build_map_spec("coupled", 0.5, 0.0)

    with pytest.raises(SpecValidationError):
        lifted_derivative(spec, 0.5, 5)


@pytest.mark.parametrize(
    ("family", "gamma_star", "epsilon", "s_h"),
    [
        ("coupled", 1.2, 0.0, 0.0),
        ("coupled", 0.05, 0.1, -1.0),
        ("remark", 0.5, -0.01, 0.5),
    ],
)
def test_invalid_specs_raise(family: str, gamma_star: float, epsilon: float, s_h: float) -> None:
    with pytest.raises(SpecValidationError):
        build_map_spec(family, gamma_star, epsilon, s_h=s_h)


def test_gamma_bounds_stay_inside_unit_interval() -> None:
    assert gamma_bounds(0.5, 0.1) == pytest.approx((0.3, 0.7))
    with pytest.raises(SpecValidationError):
        gamma_bounds(0.5, 0.3)


def test_unperturbed_map_known_values() -> None:
    spec = build_map_spec("coupled", 0.5, 0.0, s_h=0.7, c_h=-0.9)

    assert eval_map(spec, 0.25) == pytest.approx(0.375, abs=1e-15)
    assert eval_map(spec, 1.0) == 0.0
    assert eval_derivative(spec, 0.25, 2) == pytest.approx(1.5)
    assert eval_derivative(spec, 1e-12, 1) == pytest.approx(1.0, abs=1e-5)
    assert spec.boundary == pytest.approx(0.56984, abs=1e-5)
