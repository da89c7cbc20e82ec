from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from cdlab.cd_density import CdDensity, HypothesisError, model_cd_density
from cdlab.corpus import build_space, space_corpus
from cdlab.model_spaces import CurvatureProfile, ModelParams, model_density, model_volume
from cdlab.radial_space import (
    RadialSpace,
    StarShapedTruncation,
    bg_constant,
    bg_constant_curve,
    bg_density,
    chaining_parameters,
    check_ball_chaining,
    check_bishop_gromov,
    check_doubling,
    check_f_alpha_monotone,
    check_volume_monotone,
    doubling_threshold,
    f_alpha,
    myers_trend,
    polar_integral,
    scale,
    scaling_invariant_deficit,
    surface_and_volume,
    volume_curve,
)


def model_space(K, N, theta, R=None, kappa=None, n=4001):
    h = model_cd_density(K, N, R, n=n)
    return RadialSpace(h, theta, CurvatureProfile.constant(K if kappa is None else kappa))


def power_space(power, N, theta, R):
    h = CdDensity.from_function(lambda t: np.asarray(t, float) ** power, 0.0, R, N, 4001,
                                slope=lambda t: power / np.asarray(t, float))
    return RadialSpace(h, theta, CurvatureProfile.constant(0.0))


FLAT_PLANE = model_space(0.0, 2.0, 2 * math.pi, R=3.0)


# construction -----------------------------------------------------------------


def test_space_rejects_bad_inputs():
    h = model_cd_density(0.0, 3.0, 2.0)
    with pytest.raises(ValueError):
        RadialSpace(h, 0.0, CurvatureProfile.constant(0.0))
    with pytest.raises(ValueError):
        RadialSpace(h, 1.0, CurvatureProfile.constant(0.0, (0.0, 1.0)))
    with pytest.raises(ValueError):
        StarShapedTruncation(0.0)
    with pytest.raises(ValueError):
        StarShapedTruncation(5.0).validate(RadialSpace(h, 1.0, CurvatureProfile.constant(0.0)))


@pytest.mark.parametrize("entry", space_corpus(), ids=lambda e: e["name"])
def test_corpus_spaces_are_cd(entry):
    space = build_space(entry)
    assert space.check_cd().passed
    assert space.h.vanishes_at_a


# polar calculus -------------------------------------------------------------------


def test_polar_integral_examples():
    one = lambda t: 1.0
    assert polar_integral(FLAT_PLANE, one, 0.0, 2.0) == pytest.approx(4 * math.pi, abs=1e-9)
    cube = power_space(2.0, 3.0, 1.0, 1.0)
    assert polar_integral(cube, lambda t: t, 0.0, 1.0) == pytest.approx(0.25, abs=1e-9)
    sp = model_space(1.0, 3.0, 2.0)
    assert polar_integral(sp, one, 0.0, 1.0) == pytest.approx(2 * model_volume(ModelParams(1.0, 3.0), 1.0), abs=1e-9)


def test_polar_integral_domain():
    with pytest.raises(ValueError):
        polar_integral(FLAT_PLANE, lambda t: 1.0, 1.0, 0.5)


def test_polar_identity_against_simpson():
    rng = np.random.default_rng(7)
    space = model_space(1.0, 3.0, 3.0)
    for _ in range(30):
        s, r = np.sort(rng.uniform(0, space.R_max, 2))
        E = rng.uniform(0.05, space.R_max)
        a, b, c = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 3)
        phi = lambda t: 1.5 + a * np.cos(c * t) + b * t
        top = min(r, E)
        if top <= s:
            oracle = 0.0
        else:
            t = np.linspace(s, top, 20001)
            oracle = space.theta * simpson(phi(t) * model_density(ModelParams(1.0, 3.0), t), x=t)
        got = polar_integral(space, phi, s, r, StarShapedTruncation(E))
        assert got == pytest.approx(oracle, rel=1e-9, abs=1e-14)


def test_surface_and_volume_examples():
    S, V = surface_and_volume(FLAT_PLANE, None, 2.0)
    assert S == pytest.approx(4 * math.pi, abs=1e-12) and V == pytest.approx(4 * math.pi, abs=1e-9)
    sp = model_space(2.0, 3.0, 1.5)
    assert surface_and_volume(sp, None, 1.0)[0] == pytest.approx(1.5 * math.sin(1.0) ** 2, abs=1e-12)
    T = StarShapedTruncation(1.0)
    S, V = surface_and_volume(FLAT_PLANE, T, 1.5)
    assert S == 0.0 and V == pytest.approx(surface_and_volume(FLAT_PLANE, T, 1.0)[1], abs=1e-15)


def test_volume_difference_quotients_converge_to_surface():
    T = StarShapedTruncation(2.0)
    sp = model_space(1.0, 3.0, 1.0)
    for r in (0.3, 1.0, 1.7, 2.5):
        for dr in (1e-2, 1e-3, 1e-4):
            V0, V1 = volume_curve(sp, [r, r + dr], T)
            # S = 2 sin^2(t/sqrt 2) has |S'| <= sqrt 2, so the quotient is within dr/sqrt 2 of S
            assert abs((V1 - V0) / dr - surface_and_volume(sp, T, r)[0]) <= dr / math.sqrt(2) + 1e-10


# densities ---------------------------------------------------------------------


def test_bg_density_examples():
    assert bg_density(power_space(2.0, 3.0, 4 * math.pi, 2.0)) == pytest.approx(1.0, abs=1e-6)
    assert bg_density(model_space(0.0, 2.0, math.pi, 2.0)) == pytest.approx(0.5, abs=1e-6)
    from cdlab.radial_space import omega

    for N in (2.0, 3.0, 4.5):
        h = CdDensity.from_function(lambda t, N=N: 2 * np.asarray(t, float) ** (N - 1), 0.0, 1.0, N, 2001)
        sp = RadialSpace(h, N * omega(N) / 2, CurvatureProfile.constant(0.0))
        assert bg_density(sp) == pytest.approx(1.0, abs=1e-6)


def test_bg_density_rejects_bad_fit():
    h = CdDensity.from_function(lambda t: np.asarray(t, float) ** 3, 0.0, 1.0, 2.0, 2001)
    with pytest.raises(ValueError):
        bg_density(RadialSpace(h, 1.0, CurvatureProfile.constant(0.0)))


# constants ---------------------------------------------------------------------------


def test_bg_constant_flat_closed_form():
    assert bg_constant(ModelParams(0, 3, 2), 1.0) == pytest.approx((2 / 3) ** (1 / 3), abs=1e-6)
    assert bg_constant(ModelParams(0, 3, 2), 1.0) == pytest.approx(0.87358, abs=1e-5)


@settings(max_examples=30, deadline=None)
@given(N=st.floats(1.5, 5), extra=st.floats(0.05, 3), R=st.floats(0.01, 20))
def test_bg_constant_flat_homogeneity(N, extra, R):
    p = N / 2 + extra
    ratio = bg_constant(ModelParams(0, N, p), 2 * R) / bg_constant(ModelParams(0, N, p), R)
    assert ratio == pytest.approx(2 ** ((2 * p - N) / (2 * p - 1)), rel=1e-12)


def test_bg_constant_flat_quadrature_relation():
    # the quadrature route at K=0 differs from the closed form by a fixed factor
    for N, p in [(3.0, 2.0), (2.0, 2.0), (4.0, 3.0)]:
        params = ModelParams(0.0, N, p)
        factor = N ** (2 * p / (2 * p - 1)) * (2 * p - 1) / (2 * p - N)
        for R in (0.5, 2.0):
            quad = bg_constant(params, R, method="quadrature")
            assert quad == pytest.approx(factor * bg_constant(params, R), rel=1e-8)


def test_bg_constant_negative_curvature_bounded():
    Rs = [1, 2, 5, 10, 20, 30, 40, 50]
    vals = bg_constant_curve(ModelParams(-1.0, 3.0, 2.0), Rs)
    assert np.all(np.diff(vals) >= 0)
    assert abs(vals[-1] - vals[-3]) / vals[-1] < 1e-4


def test_bg_constant_positive_curvature_two_pieces():
    params = ModelParams(2.0, 3.0, 2.0)
    half = params.half_horizon
    vals = bg_constant_curve(params, [0.5 * half, half, 1.5 * half, 1.9 * half])
    assert np.all(np.diff(vals) > 0)
    assert bg_constant_curve(params, [params.horizon])[0] == math.inf


def test_bg_constant_requires_integrability():
    with pytest.raises(ValueError):
        bg_constant(ModelParams(0, 3, 1.5), 1.0)


def test_doubling_threshold_flat_independent_of_R():
    params = ModelParams(0.0, 3.0, 2.0)
    vals = [doubling_threshold(params, R) for R in (0.1, 1.0, 7.0)]
    assert vals == pytest.approx([vals[0]] * 3, rel=1e-12)
    expected = (1 / (2 * (2 / 3) ** (1 / 3) * 3 ** (-1 / 3))) ** 1.5
    assert vals[0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("K,N,p,R", [(0, 3, 2, 1.0), (1, 3, 2, 1.0), (-1, 2.5, 2, 2.0), (2, 4, 3, 0.5)])
def test_doubling_threshold_inversion(K, N, p, R):
    params = ModelParams(K, N, p)
    A = doubling_threshold(params, R)
    C = bg_constant(params, R)
    v = model_volume(params, R)
    q = 1 / (2 * p - 1)
    assert C * v ** q * R ** (-2 * p * q) * A ** (p * q) == pytest.approx(0.5, abs=1e-9)


# Bishop-Gromov -----------------------------------------------------------------------


@pytest.mark.parametrize("entry", [e for e in space_corpus() if e["role"] == "zero-deficit"],
                         ids=lambda e: e["name"])
def test_bishop_gromov_zero_deficit(entry):
    space = build_space(entry)
    rep = check_bishop_gromov(space, entry["K"], entry["p"])
    assert rep.passed
    ratio = rep.labels == "ratio"
    assert np.all(rep.rhs[ratio] == 0)
    assert check_volume_monotone(space, entry["K"]).passed


@pytest.mark.parametrize("entry", [e for e in space_corpus() if e["role"] == "perturbed"],
                         ids=lambda e: e["name"])
def test_bishop_gromov_perturbed(entry):
    rep = check_bishop_gromov(build_space(entry), entry["K"], entry["p"])
    assert rep.passed


def test_bishop_gromov_flat_vs_positive_curvature():
    space = model_space(0.0, 3.0, 4 * math.pi, R=3.0)
    rep = check_bishop_gromov(space, 2.0, 2.0, points=np.linspace(0.01, math.pi / 2, 40))
    assert rep.passed and rep.min_slack >= 0


def test_bishop_gromov_theta_form_flat_plane():
    rep = check_bishop_gromov(FLAT_PLANE, 0.5, 2.0)
    theta = rep.labels == "theta"
    assert theta.any() and rep.passed


def test_bishop_gromov_truncated():
    rep = check_bishop_gromov(model_space(1.0, 3.0, 1.0), 1.0, 2.0, T=StarShapedTruncation(1.2))
    assert rep.passed and "theta" not in set(rep.labels)


def test_bishop_gromov_requires_vanishing_average():
    h = CdDensity.from_function(lambda t: 1 + np.asarray(t, float), 0.0, 2.0, 2.0, 401)
    with pytest.raises(HypothesisError):
        check_bishop_gromov(RadialSpace(h, 1.0, CurvatureProfile.constant(0.0)), 0.0, 2.0)


# doubling ---------------------------------------------------------------------------


def test_doubling_zero_deficit_and_flat():
    assert check_doubling(model_space(1.0, 3.0, 1.0), 1.0, 2.0, 1.5).passed
    rep = check_doubling(model_space(0.0, 3.0, 1.0, R=3.0), 0.0, 2.0, 2.0)
    assert rep.passed
    rows = rep.labels == "deficit-corrected"
    assert np.allclose(rep.lhs[rows], 1.0, atol=1e-9)


def test_doubling_perturbed_sphere():
    space = model_space(1.0, 3.0, 1.0)
    assert check_doubling(space, 2.0, 2.0, 0.05).passed


def test_doubling_above_threshold_is_refused():
    space = model_space(1.0, 3.0, 1.0)
    with pytest.raises(HypothesisError):
        check_doubling(space, 2.0, 2.0, 1.0)


def test_factor_two_doubling_over_corpus():
    ran = 0
    for entry in space_corpus():
        space = build_space(entry)
        for R in (0.05, 0.25, 1.0):
            try:
                rep = check_doubling(space, entry["K"], entry["p"], min(R, space.R_max))
            except HypothesisError:
                continue
            ran += 1
            assert rep.passed, entry["name"]
    assert ran >= 20


# f_alpha ------------------------------------------------------------------------------


def test_f_alpha_model_constant():
    sp = model_space(1.0, 3.0, 2.5)
    f = f_alpha(sp, 1.0, 1.0, np.linspace(0.1, 3.0, 20))
    assert np.allclose(f, 2.5, atol=1e-9)


def test_f_alpha_flat_vs_positive():
    sp = model_space(0.0, 3.0, 1.0, R=3.0)
    assert check_f_alpha_monotone(sp, 2.0, 1 / 3, tol=1e-6).passed


def test_f_alpha_truncated():
    sp = model_space(0.0, 3.0, 1.0, R=3.0)
    T = StarShapedTruncation(1.0)
    rep = check_f_alpha_monotone(sp, 2.0, 1.0, T=T)
    assert rep.passed
    f = f_alpha(sp, 2.0, 1.0, [0.999, 1.001], T)
    assert f[1] < f[0]


def test_f_alpha_rejects_alpha():
    with pytest.raises(ValueError):
        f_alpha(FLAT_PLANE, 0.0, 1.5, [0.5])


# scaling ----------------------------------------------------------------------------------


def test_scale_identity():
    sp = model_space(1.0, 3.0, 1.0)
    s1 = scale(sp, 1.0, 1.0)
    assert np.array_equal(s1.h.grid, sp.h.grid) and np.array_equal(s1.h.values, sp.h.values)


@pytest.mark.parametrize("entry", [e for e in space_corpus() if e["role"] == "perturbed"],
                         ids=lambda e: e["name"])
def test_scaling_invariant_deficit_preserved(entry):
    sp = build_space(entry)
    K, p = entry["K"], entry["p"]
    R = 0.5 * sp.R_max
    before = scaling_invariant_deficit(sp, K, p, R)
    after = scaling_invariant_deficit(scale(sp, 2.0, 5.0), K / 4, p, 2 * R)
    assert before > 0
    assert after == pytest.approx(before, rel=1e-12)


def test_scale_flat_plane_keeps_density():
    plane = model_space(0.0, 2.0, 2 * math.pi, R=3.0, n=20001)
    scaled = scale(plane, 3.0, 9.0)
    assert scaled.check_cd().passed
    assert bg_density(scaled) == pytest.approx(bg_density(plane), rel=1e-9)


# ball chaining ----------------------------------------------------------------------------


def test_chaining_parameters():
    c = chaining_parameters(3.0, 2.0)
    assert c["eta"] in (0.9, 0.95, 0.99)
    assert c["beta"] == max(c["beta_prime"] * c["beta_second"], 2 * c["beta_prime"])
    assert math.log(c["eta"]) / math.log(2 - c["eta"]) >= -2


def test_ball_chaining_over_flat_corpus():
    ran = 0
    for entry in space_corpus():
        space = build_space(entry)
        for R in (0.01, 0.1, 1.0):
            if R > space.R_max:
                continue
            try:
                rep = check_ball_chaining(space, entry["p"], R)
            except HypothesisError:
                continue
            if len(rep):
                ran += 1
                assert rep.passed, entry["name"]
    assert ran >= 10


# Myers trend -------------------------------------------------------------------------------


def test_myers_zero_family():
    fam = [(None, CurvatureProfile.constant(2.0)) for _ in range(3)]
    rec = myers_trend(fam, 2.0, 2.0, 3.0)
    assert np.allclose(rec.excess, 0.0, atol=1e-8)


def test_myers_trend_decreases_to_zero():
    fam = [(None, CurvatureProfile.constant(2.0 - d)) for d in (0.2, 0.1, 0.05, 0.025)]
    rec = myers_trend(fam, 2.0, 2.0, 3.0)
    assert rec.decreasing
    assert all(e > 0 for e in rec.excess)
    assert abs(rec.limit) < 1e-4
    assert rec.reference_exponent == pytest.approx(0.2)
    assert rec.band_upper == pytest.approx(2 * 2 * 2 / (8 * 3))


def test_myers_rejects_increasing_deficits():
    fam = [(None, CurvatureProfile.constant(2.0 - d)) for d in (0.05, 0.2)]
    with pytest.raises(ValueError):
        myers_trend(fam, 2.0, 2.0, 3.0)
