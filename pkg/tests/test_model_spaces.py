from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cdlab.model_spaces import (
    CurvatureProfile,
    ExtendedNonNeg,
    ModelParams,
    SolverConfig,
    ext_mul,
    generalized_sine,
    model_density,
    model_mean_curvature,
    model_volume,
    monotone_approximation,
    sigma,
    sigma_values,
    sin_k,
    tau,
)


def rk4_sine(kfun, t_end, steps):
    """Fixed-step RK4 for v'' + k v = 0, v(0)=0, v'(0)=1."""
    h = t_end / steps
    t, y = 0.0, np.array([0.0, 1.0])

    def f(t, y):
        return np.array([y[1], -kfun(t) * y[0]])

    for _ in range(steps):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y[0]


# generalized sine ---------------------------------------------------------


def test_sine_flat_is_identity():
    assert generalized_sine(CurvatureProfile.constant(0.0, (0, 10)), 2.5) == pytest.approx(2.5, abs=1e-12)


def test_sine_unit_curvature_quarter_period():
    assert generalized_sine(CurvatureProfile.constant(1.0, (0, math.pi)), math.pi / 2) == pytest.approx(1.0, abs=1e-8)


def test_sine_linear_curvature_against_richardson_rk4():
    k = CurvatureProfile.closed_form(lambda t: np.asarray(t, float), (0.0, 2.0))
    coarse, fine = rk4_sine(lambda t: t, 1.0, 200), rk4_sine(lambda t: t, 1.0, 400)
    oracle = fine + (fine - coarse) / 15
    assert generalized_sine(k, 1.0) == pytest.approx(oracle, abs=1e-8)


def test_sine_rejects_points_outside_domain():
    with pytest.raises(ValueError):
        generalized_sine(CurvatureProfile.constant(1.0, (0, 1)), 1.5)


def test_sine_matches_closed_form_on_grid():
    rng = np.random.default_rng(3)
    for c, t in zip(rng.uniform(-4, 4, 100), rng.uniform(0, 1, 100)):
        k = CurvatureProfile.constant(c, (0, 1))
        assert abs(generalized_sine(k, t) - sin_k(c, t)) <= 1e-8


# sigma and tau -------------------------------------------------------------


def test_sigma_flat_is_t():
    assert float(sigma(CurvatureProfile.constant(0.0), 0.3, 1.7)) == pytest.approx(0.3, abs=1e-12)


def test_sigma_unit_curvature_half():
    s = sigma(CurvatureProfile.constant(1.0), 0.5, math.pi / 2)
    assert float(s) == pytest.approx(0.7071067811865476, abs=1e-9)


def test_sigma_infinite_when_sine_vanishes_at_theta():
    s = sigma(CurvatureProfile.constant(1.0), 0.5, math.pi)
    assert s.is_inf and s.tie


def test_sigma_infinite_past_first_zero_without_tie():
    s = sigma(CurvatureProfile.constant(1.0), 0.5, 4.0)
    assert s.is_inf and not s.tie


def test_sigma_rejects_nonpositive_theta():
    with pytest.raises(ValueError):
        sigma(CurvatureProfile.constant(1.0), 0.5, 0.0)


def test_tau_flat_is_t():
    assert float(tau(CurvatureProfile.constant(0.0), 5, 0.4, 2.0)) == pytest.approx(0.4, abs=1e-12)


def test_tau_zero_t_with_infinite_sigma_is_zero():
    assert float(tau(CurvatureProfile.constant(1.0), 2, 0.0, math.pi)) == 0.0


def test_tau_composition_of_closed_forms():
    val = float(tau(CurvatureProfile.constant(1.0), 2, 0.5, math.pi / 2))
    assert val == pytest.approx(math.sqrt(0.5 * 0.70710678118654757), abs=1e-8)


def test_extended_arithmetic_conventions():
    assert ext_mul(0.0, math.inf) == 0.0
    assert ext_mul(2.0, math.inf) == math.inf
    assert ExtendedNonNeg(math.inf).is_inf


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-4, 4), theta=st.floats(0.05, 1.5))
def test_sigma_boundary_values_exact(c, theta):
    vals = sigma_values(CurvatureProfile.constant(c), [0.0, 1.0], theta)
    assert vals[0] == 0.0 and vals[1] == 1.0
    assert float(sigma(CurvatureProfile.constant(c), 0.0, theta)) == 0.0
    assert float(sigma(CurvatureProfile.constant(c), 1.0, theta)) == 1.0


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-4, 4), N=st.floats(1.2, 6), t=st.floats(0.01, 0.99), theta=st.floats(0.05, 1.5))
def test_tau_power_identity(c, N, t, theta):
    k = CurvatureProfile.constant(c)
    tv = float(tau(k, N, t, theta))
    sv = float(sigma(k.times(1 / (N - 1)), t, theta))
    assume(math.isfinite(sv))
    assert math.isfinite(tv)
    assert tv ** N == pytest.approx(t * sv ** (N - 1), rel=1e-12, abs=1e-14)


# model quantities ------------------------------------------------------------


def test_model_density_examples():
    assert model_density(ModelParams(0, 3), 2.0) == pytest.approx(4.0, abs=1e-14)
    assert model_density(ModelParams(2, 3), math.pi / 2) == pytest.approx(1.0, abs=1e-14)
    assert model_density(ModelParams(-2, 3), 1.0) == pytest.approx(math.sinh(1.0) ** 2, abs=1e-12)


def test_model_density_beyond_horizon_raises():
    with pytest.raises(ValueError):
        model_density(ModelParams(2, 3), 3.5)


def test_model_volume_examples():
    assert model_volume(ModelParams(0, 3), 2.0) == 8 / 3
    assert model_volume(ModelParams(2, 3), math.pi) == pytest.approx(math.pi / 2, abs=1e-9)
    assert model_volume(ModelParams(1.3, 2.5), 0.0) == 0.0


def test_model_mean_curvature_examples():
    assert model_mean_curvature(ModelParams(0, 4), 2.0) == pytest.approx(1.5, abs=1e-14)
    assert model_mean_curvature(ModelParams(2, 3), math.pi / 2) == pytest.approx(0.0, abs=1e-12)
    assert model_mean_curvature(ModelParams(-2, 3), 5.0) == pytest.approx(2 / math.tanh(5.0), abs=1e-9)


def test_model_mean_curvature_at_horizon_raises():
    with pytest.raises(ValueError):
        model_mean_curvature(ModelParams(2, 3), math.pi)
    with pytest.raises(ValueError):
        model_mean_curvature(ModelParams(2, 3), 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0, 1.0)
    with pytest.raises(ValueError):
        ModelParams(0, 4, p=2.0)
    assert ModelParams(2, 3).horizon == pytest.approx(math.pi)


# monotone approximation ---------------------------------------------------------


def test_monotone_approximation_fixed_point_for_lipschitz():
    k = CurvatureProfile.closed_form(lambda t: np.sin(np.asarray(t, float)), (0.0, 3.0))
    for x in (0.3, 1.2, 2.9):
        assert monotone_approximation(k, 2, x) == pytest.approx(math.sin(x), abs=1e-9)


def step_profile():
    return CurvatureProfile.closed_form(lambda t: np.where(np.asarray(t, float) <= 1.0, -1.0, 0.0), (0.0, 2.0))


def test_monotone_approximation_step_example():
    assert monotone_approximation(step_profile(), 1, 1.5) == pytest.approx(-0.5, abs=1e-9)


def test_monotone_approximation_converges_from_below():
    vals = [monotone_approximation(step_profile(), n, 1.5) for n in (1, 2, 4, 8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(0.0, abs=1e-12)


def test_monotone_approximation_sampled_is_monotone_and_below():
    rng = np.random.default_rng(0)
    grid = np.linspace(0, 3, 25)
    k = CurvatureProfile.sampled(grid, rng.uniform(-2, 5, grid.size))
    for x in np.linspace(0, 3, 41):
        prev = -math.inf
        for n in range(1, 65):
            v = monotone_approximation(k, n, x)
            assert v >= prev - 1e-12
            assert v <= k(x) + 1e-12
            prev = v


def test_sampled_profile_respects_lower_bound():
    k = CurvatureProfile.sampled([0, 1, 2], [1.0, -1.0, 3.0])
    assert k.lower_bound == -1.0
    assert k(0.5) == pytest.approx(0.0)


def test_solver_config_tie_tolerance_is_configurable():
    cfg = SolverConfig(tie_tol=1e-3)
    s = sigma(CurvatureProfile.constant(1.0), 0.5, math.pi - 1e-4, cfg)
    assert s.is_inf and s.tie
