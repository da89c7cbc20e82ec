from __future__ import annotations

import math

import numpy as np
import pytest

from cdlab.cd_density import (
    CdDensity,
    HypothesisError,
    SamplingConfig,
    SlackReport,
    check_comparison_1d,
    comparison_alpha,
    integral_deficit,
    maximal_support_length,
    mean_curvature_deficit,
    model_cd_density,
    mollify,
    synthesize_extremal,
    verify_differential,
    verify_sigma_inequality,
)
from cdlab.corpus import build_density, build_kappa, density_corpus, density_kappa
from cdlab.model_spaces import CurvatureProfile


def flat_one(a=0.0, b=2.0, N=2.0):
    return CdDensity.from_function(lambda t: np.ones_like(np.asarray(t, float)), a, b, N,
                                   slope=lambda t: np.zeros_like(np.asarray(t, float)))


def exp_square(a, b):
    return CdDensity.from_function(lambda t: np.exp(np.asarray(t, float) ** 2), a, b, 2.0)


# SlackReport ---------------------------------------------------------------


def test_slack_report_passed_iff_min_slack_above_tol():
    r = SlackReport([0, 1, 2], [0, 0, 1e-7], [0, 0, 0], tol=1e-6)
    assert r.min_slack == pytest.approx(-1e-7) and r.passed
    assert not SlackReport([0], [1.0], [0.0], tol=1e-6).passed


def test_slack_report_infinite_lhs_is_a_failure():
    r = SlackReport([0], [math.inf], [1.0], tol=1.0)
    assert r.min_slack == -math.inf and not r.passed


def test_slack_report_length_mismatch():
    with pytest.raises(ValueError):
        SlackReport([0, 1], [0], [0], tol=0)


def test_slack_report_csv_round_trip():
    r = SlackReport([0.5], [1.0], [2.0], tol=0)
    rows = r.to_csv().splitlines()
    assert rows[0] == "abscissa,lhs,rhs,slack"
    assert [float(x) for x in rows[1].split(",")] == [0.5, 1.0, 2.0, 1.0]


# verify_differential ---------------------------------------------------------


def test_differential_sine_square_saturates():
    h = CdDensity.from_function(lambda t: np.sin(t) ** 2, 0.1, 3.0, 3.0, 4001)
    rep = verify_differential(h, CurvatureProfile.constant(2.0), tol=1e-6)
    assert rep.passed
    assert np.max(np.abs(rep.slack)) <= 1e-6


def test_differential_constant_density():
    rep = verify_differential(flat_one(), CurvatureProfile.constant(0.0))
    assert rep.passed and np.all(rep.slack == 0)


def test_differential_exp_square_fails_everywhere():
    rep = verify_differential(exp_square(0.1, 1.0), CurvatureProfile.constant(0.0))
    assert not rep.passed
    assert np.all(rep.slack <= -2 + 1e-6)


def test_differential_rejects_interior_zero():
    h = CdDensity.from_function(lambda t: (np.asarray(t) - 1.0) ** 2, 0.0, 2.0, 3.0, 101)
    with pytest.raises(ValueError):
        verify_differential(h, CurvatureProfile.constant(0.0))


# verify_sigma_inequality ------------------------------------------------------


@pytest.mark.parametrize("K,N", [(2.0, 3.0), (0.0, 3.0), (-1.0, 2.5), (1.0, 4.0)])
def test_sigma_inequality_model_saturates(K, N):
    R = None if K > 0 else 3.0
    h = model_cd_density(K, N, R)
    rep = verify_sigma_inequality(h, CurvatureProfile.constant(K), SamplingConfig(n=500, seed=1))
    assert rep.passed and rep.min_slack >= -1e-7
    assert verify_differential(h, CurvatureProfile.constant(K)).passed


def test_sigma_inequality_constant_density():
    rep = verify_sigma_inequality(flat_one(), CurvatureProfile.constant(0.0), SamplingConfig(n=50))
    assert rep.passed
    assert np.max(np.abs(rep.slack)) <= 1e-12


def test_sigma_inequality_exp_square_midpoint_fails():
    rep = verify_sigma_inequality(exp_square(0.0, 2.0), CurvatureProfile.constant(0.0),
                                  SamplingConfig(triples=((0.5, 1.5, 0.5), (1.5, 0.5, 0.5))))
    assert not rep.passed
    assert rep.abscissae.shape == (2, 3)


def test_sigma_inequality_infinite_coefficient_is_a_recorded_fail():
    h = flat_one(0.0, 5.0, 2.0)
    rep = verify_sigma_inequality(h, CurvatureProfile.constant(1.0), SamplingConfig(triples=((0.0, 4.0, 0.5),)))
    assert rep.min_slack == -math.inf and not rep.passed


def corpus_cases():
    return [pytest.param(e, id=e["name"]) for e in density_corpus()]


@pytest.mark.parametrize("entry", corpus_cases())
def test_corpus_checks_agree(entry):
    h = build_density(entry["density"])
    kappa = density_kappa(entry)
    d = verify_differential(h, kappa, tol=float(entry.get("tol", 1e-6)))
    s = verify_sigma_inequality(h, kappa, SamplingConfig(n=60, seed=0))
    assert d.passed == s.passed
    assert d.passed == (entry["expected"] == "pass")


def test_corpus_has_twenty_densities_with_both_verdicts():
    corpus = density_corpus()
    assert len(corpus) == 20
    assert {e["expected"] for e in corpus} == {"pass", "fail"}


def test_sampled_density_reference():
    grid = np.linspace(0.0, 2.0, 401)
    ref = {"kind": "sampled", "grid": grid.tolist(), "values": (grid ** 2).tolist(), "N": 3,
           "flags": {"vanishes_at_a": True}}
    h = build_density(ref)
    assert h.vanishes_at_a
    assert verify_differential(h, CurvatureProfile.constant(0.0), tol=1e-4).passed


# synthesize_extremal ---------------------------------------------------------


def test_extremal_flat_matches_power():
    h = synthesize_extremal(CurvatureProfile.constant(0.0, (0.0, 2.0)), 3.0)
    t = np.linspace(0.1, 2.0, 50)
    ref = t ** 2 / 4.0
    assert np.max(np.abs(h(t) / ref - 1)) <= 1e-6


def test_extremal_positive_curvature_blows_down_at_pi():
    h = synthesize_extremal(CurvatureProfile.constant(2.0), 3.0)
    assert h.domain[1] == pytest.approx(math.pi, abs=1e-6)
    t = np.linspace(0.1, 3.0, 30)
    assert np.max(np.abs(h(t) - np.sin(t) ** 2)) <= 1e-6


def linear_profiles():
    return [{"kind": "linear", "k0": k0, "k1": k1, "length": 3.0}
            for k0, k1 in [(0.0, 1.0), (1.0, -0.3), (-1.0, 0.5), (2.0, 0.0), (0.5, 2.0)]]


@pytest.mark.parametrize("ref", linear_profiles())
def test_extremal_self_consistency(ref):
    kappa = build_kappa(ref)
    h = synthesize_extremal(kappa, 3.0)
    assert verify_differential(h, kappa, tol=1e-6).passed
    assert h.vanishes_at_a


def test_extremal_slope_start():
    from cdlab.cd_density import SlopeStart

    h = synthesize_extremal(CurvatureProfile.constant(0.0, (0.0, 2.0)), 3.0, pole=SlopeStart(1.0, 0.0))
    assert not h.vanishes_at_a
    assert np.allclose(h.values, 1.0)


@pytest.mark.parametrize("ref", linear_profiles())
def test_extremal_passes_comparison(ref):
    kappa = build_kappa(ref)
    h = synthesize_extremal(kappa, 3.0)
    for K in (kappa.lower_bound, kappa.lower_bound + 0.5):
        rep = check_comparison_1d(h, kappa, K, 2.0)
        assert rep.min_slack >= -1e-6


# maximal_support_length -----------------------------------------------------


def test_support_length_examples():
    assert maximal_support_length(CurvatureProfile.constant(2.0), 3) == pytest.approx(math.pi, abs=1e-6)
    assert maximal_support_length(CurvatureProfile.constant(3.0), 4) == pytest.approx(math.pi, abs=1e-6)
    inf = maximal_support_length(CurvatureProfile.constant(0.0), 2.5)
    assert inf.is_inf and inf == math.inf


def test_support_length_antitone():
    fam = [CurvatureProfile.closed_form(lambda t, c=c: c + 0.4 * np.asarray(t, float), (0.0, 10.0),
                                        lower_bound=c, upper_bound=c + 4.0)
           for c in np.linspace(0.2, 3.0, 10)]
    lengths = [float(maximal_support_length(k, 3.0)) for k in fam]
    assert all(b <= a + 1e-10 for a, b in zip(lengths, lengths[1:]))


# mollify --------------------------------------------------------------------


def test_mollify_model_passes():
    h = model_cd_density(2.0, 3.0, n=4001)
    h_eps, k_eps = mollify(h, CurvatureProfile.constant(2.0), 0.05)
    assert h_eps.domain[0] >= 0.05 - 1e-12 and h_eps.domain[1] <= math.pi - 0.05 + 1e-12
    assert verify_differential(h_eps, k_eps, tol=1e-6).passed


def test_mollify_converges_locally_uniformly():
    h = model_cd_density(1.0, 3.0, n=4001)
    t = np.linspace(0.5, 3.5, 200)
    dists = []
    for eps in (0.1, 0.05, 0.025):
        h_eps, _ = mollify(h, CurvatureProfile.constant(1.0), eps)
        dists.append(np.max(np.abs(h_eps(t) - h(t))))
    assert dists[0] > dists[1] > dists[2]
    assert dists[-1] < 1e-3


def test_mollify_vanishing_endpoint_liminf():
    h = model_cd_density(0.0, 3.0, 2.0, n=4001)
    assert h.vanishes_at_a
    vals = []
    for eps in (0.1, 0.05, 0.025):
        h_eps, _ = mollify(h, CurvatureProfile.constant(0.0), eps)
        vals.append(h_eps(h_eps.domain[0]))
    assert min(vals) < 1e-3


def test_mollify_rejects_large_eps():
    with pytest.raises(ValueError):
        mollify(model_cd_density(0.0, 3.0, 1.0), CurvatureProfile.constant(0.0), 0.6)


@pytest.mark.parametrize("entry", [c for c in corpus_cases() if c.values[0]["expected"] == "pass"])
@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_mollify_preserves_passing(entry, eps):
    h = build_density(entry["density"])
    kappa = density_kappa(entry)
    tol = float(entry.get("tol", 1e-6))
    assert verify_differential(h, kappa, tol=tol).passed
    h_eps, k_eps = mollify(h, kappa, eps)
    assert verify_differential(h_eps, k_eps, tol=tol).passed


# deficits ------------------------------------------------------------------------


def test_mean_curvature_deficit_examples():
    assert np.all(mean_curvature_deficit(model_cd_density(2.0, 3.0), 2.0).psi == 0)
    h = model_cd_density(0.0, 3.0, 3.0)
    psi = mean_curvature_deficit(h, 2.0, points=[math.pi / 2]).psi
    assert psi[0] == pytest.approx(4 / math.pi, abs=1e-6)
    steeper = model_cd_density(3.0, 3.0)
    assert np.all(mean_curvature_deficit(steeper, 2.0, points=np.linspace(0.1, 2.5, 20)).psi == 0)


def test_mean_curvature_deficit_beyond_horizon():
    with pytest.raises(ValueError):
        mean_curvature_deficit(model_cd_density(0.0, 3.0, 4.0), 2.0, points=[3.5])


def test_integral_deficit_examples():
    t2 = CdDensity.from_function(lambda t: np.asarray(t, float) ** 2, 0.0, 1.0, 3.0)
    assert integral_deficit(t2, CurvatureProfile.constant(2.0), 1.0, 2.0, 1.0) == 0.0
    for p in (1.0, 2.0, 3.5):
        assert integral_deficit(t2, CurvatureProfile.constant(1.0), 2.0, p, 1.0) == pytest.approx(1 / 3, abs=1e-9)
    one = flat_one(0.0, 1.0, 3.0)
    k = CurvatureProfile.closed_form(lambda t: 2.0 - np.asarray(t, float), (0.0, 1.0))
    assert integral_deficit(one, k, 2.0, 2.0, 1.0) == pytest.approx(1 / 3, abs=1e-9)


@pytest.mark.parametrize("entry", corpus_cases())
def test_integral_deficit_nondecreasing_in_K(entry):
    h = build_density(entry["density"])
    kappa = density_kappa(entry)
    r = h.domain[1]
    vals = [integral_deficit(h, kappa, K, 2.0, r) for K in (-2.0, -0.5, 0.0, 1.0, 2.5)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_comparison_alpha():
    assert comparison_alpha(3, 2) == pytest.approx(18.0)
    with pytest.raises(ValueError):
        comparison_alpha(4, 2)


def test_comparison_flat_model_below_K():
    h = model_cd_density(0.0, 3.0, 3.0)
    rep = check_comparison_1d(h, CurvatureProfile.constant(0.0), 2.0, 2.0)
    assert rep.passed


def test_comparison_zero_deficit_is_zero_slack():
    k = CurvatureProfile.constant(2.0)
    h = synthesize_extremal(k, 3.0)
    rep = check_comparison_1d(h, k, 2.0, 2.0)
    assert rep.passed
    assert np.max(np.abs(rep.lhs)) <= 1e-6 and np.all(rep.rhs == 0)


def test_comparison_second_regime():
    h = model_cd_density(1.0, 3.0, 3.0)
    rep = check_comparison_1d(h, CurvatureProfile.constant(1.0), 2.0, 3.0)
    assert rep.passed
    assert "beyond-half-horizon" in set(rep.labels)


def test_comparison_requires_vanishing_average():
    h = flat_one(0.0, 2.0, 3.0)
    with pytest.raises(HypothesisError):
        check_comparison_1d(h, CurvatureProfile.constant(0.0), 1.0, 2.0)
