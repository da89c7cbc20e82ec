"""Pointed spaces whose rays all carry the same CD density, and the
volume-comparison checks built on them (quantitative Bishop-Gromov,
doubling, f_alpha monotonicity, scaling, ball chaining, Myers trend)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .cd_density import (
    CdDensity,
    HypothesisError,
    SlackReport,
    integral_deficit,
    maximal_support_length,
    synthesize_extremal,
    verify_differential,
)
from .model_spaces import CurvatureProfile, ModelParams, model_density, model_mean_curvature, model_volume

__all__ = [
    "RadialSpace",
    "StarShapedTruncation",
    "TrendRecord",
    "polar_integral",
    "surface_and_volume",
    "volume_curve",
    "bg_density",
    "ratio_density",
    "omega",
    "bg_constant",
    "bg_constant_curve",
    "bg_constant_flat",
    "doubling_threshold",
    "check_bishop_gromov",
    "check_volume_monotone",
    "check_doubling",
    "check_f_alpha_monotone",
    "f_alpha",
    "scale",
    "scaling_invariant_deficit",
    "chaining_parameters",
    "check_ball_chaining",
    "myers_trend",
    "log_points",
]


@dataclass(frozen=True, eq=False)
class RadialSpace:
    """Exchangeable rays [0, R_max] with density h and total quotient mass theta."""

    h: CdDensity
    theta: float
    kappa: CurvatureProfile
    name: str = ""

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("angular mass must be positive")
        if self.h.domain[0] != 0.0:
            raise ValueError("ray density must start at the pole 0")
        a, b = self.kappa.domain
        if a > 0 or b < self.h.domain[1] * (1 - 1e-12):
            raise ValueError("curvature profile must cover the ray")

    @property
    def N(self) -> float:
        return self.h.N

    @property
    def R_max(self) -> float:
        return self.h.domain[1]

    def check_cd(self, tol: float = 1e-6) -> SlackReport:
        return verify_differential(self.h, self.kappa, tol)


@dataclass(frozen=True)
class StarShapedTruncation:
    """T with Q_T(r) of mass theta * 1[r < exit]."""

    exit: float

    def __post_init__(self):
        if not self.exit > 0:
            raise ValueError("exit radius must be positive")

    def validate(self, space: RadialSpace) -> StarShapedTruncation:
        if self.exit > space.R_max * (1 + 1e-12):
            raise ValueError("exit radius beyond R_max")
        return self


def _exit(space: RadialSpace, T: StarShapedTruncation | None) -> float:
    return space.R_max if T is None else min(T.validate(space).exit, space.R_max)


def _quad(f: Callable, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        # roundoff warnings at 1e-12 relative are expected for smooth integrands
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
    return val


def log_points(lo: float, hi: float, per_decade: int = 32) -> np.ndarray:
    """Logarithmic grid on [lo, hi] with the given density per decade."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)


# ---------------------------------------------------------------------------
# polar calculus


def polar_integral(space: RadialSpace, phi: Callable, s: float, r: float,
                   T: StarShapedTruncation | None = None) -> float:
    """int_s^r theta 1[t<E] phi(t) h(t) dt."""
    if not 0 <= s < r <= space.R_max * (1 + 1e-12):
        raise ValueError("need 0 <= s < r <= R_max")
    E = _exit(space, T)
    h = space.h
    return space.theta * _quad(lambda t: phi(t) * h(t), s, min(r, E))


def surface_and_volume(space: RadialSpace, T: StarShapedTruncation | None, r: float) -> tuple[float, float]:
    """(S_T(r), V_T(r))."""
    if not 0 <= r <= space.R_max * (1 + 1e-12):
        raise ValueError("r outside [0, R_max]")
    E = _exit(space, T)
    S = space.theta * space.h(r) if r < E else 0.0
    V = space.theta * _quad(space.h, 0.0, min(r, E))
    return S, V


def volume_curve(space: RadialSpace, points, T: StarShapedTruncation | None = None) -> np.ndarray:
    """V_T at increasing points by summing quadratures over consecutive gaps."""
    pts = np.asarray(points, dtype=float)
    E = _exit(space, T)
    out = np.empty(pts.size)
    acc, prev = 0.0, 0.0
    for i, r in enumerate(pts):
        top = min(r, E)
        if top > prev:
            acc += _quad(space.h, prev, top)
            prev = top
        out[i] = acc
    return space.theta * out


def _pole_coefficient(h: CdDensity) -> float:
    """c in h ~ c t^{N-1}, extrapolating log(h/t^{N-1}) linearly in t^2."""
    gamma, _ = h.exponent_fit()
    if abs(gamma - (h.N - 1)) > 0.05 * (h.N - 1) + 0.02:
        raise ValueError(f"power-law fit exponent {gamma:.4f} far from N-1={h.N - 1}")
    t = h.grid[1:11] - h.grid[0]
    y = np.log(h.values[1:11]) - (h.N - 1) * np.log(t)
    slope, icpt = np.polyfit(t * t, y, 1)
    return float(math.exp(icpt))


def omega(N: float) -> float:
    return math.pi ** (N / 2) / special.gamma(N / 2 + 1)


def bg_density(space: RadialSpace) -> float:
    """theta_N = lim m(B_r)/(omega_N r^N) = theta c/(N omega_N)."""
    return space.theta * _pole_coefficient(space.h) / (space.N * omega(space.N))


def ratio_density(space: RadialSpace) -> float:
    """lim m(B_r)/v_{K,N}(r) = theta c (independent of K)."""
    return space.theta * _pole_coefficient(space.h)


# ---------------------------------------------------------------------------
# Bishop-Gromov constant


def _bg_prefactor(N: float, p: float) -> float:
    return ((N - 1) / ((2 * p - 1) * (2 * p - N))) ** ((p - 1) / (2 * p - 1))


def bg_constant_flat(N: float, p: float, R: float) -> float:
    """Closed form of the constant for K = 0."""
    ModelParams(0.0, N, p)
    return _bg_prefactor(N, p) * R ** ((2 * p - N) / (2 * p - 1))


@lru_cache(maxsize=4096)
def _volume(K: float, N: float, t: float) -> float:
    return model_volume(ModelParams(K, N), t)


def bg_constant_curve(params: ModelParams, Rs) -> np.ndarray:
    """The two-piece quadrature constant at increasing radii (any K)."""
    K, N, p = params.K, params.N, params.p
    if p is None:
        raise ValueError("params.p is required")
    Rs = np.asarray(Rs, dtype=float)
    if np.any(np.diff(Rs) < 0) or np.any(Rs <= 0):
        raise ValueError("radii must be positive and increasing")
    hz = params.horizon
    half = params.half_horizon
    q = 1.0 / (2 * p - 1)
    beta = (N - 1) * q
    mexp = (4 * p - N - 1) / ((N - 1) * (2 * p - 1))

    def g1(t):
        # h (t/v)^{1+q} times t^beta; the t^{-beta} factor is the quadrature weight
        if t < 1e-9 * hz if math.isfinite(hz) else t < 1e-9:
            return N ** (1 + q)
        v = _volume(K, N, float(t))
        return model_density(params, t) * (t / v) ** (1 + q) * t ** beta

    def g2(t):
        v = _volume(K, N, float(t))
        hh = model_density(params, t)
        return (1.0 / v) ** (q + 1) * (t * hh + v / hh ** mexp)

    out = np.empty(Rs.size)
    i1 = i2 = 0.0
    prev1 = 0.0
    prev2 = half
    for i, R in enumerate(Rs):
        if R > hz * (1 + 1e-14):
            raise ValueError("R beyond the model horizon")
        if R >= hz:
            out[i:] = math.inf
            break
        top1 = min(R, half)
        if top1 > prev1:
            if prev1 == 0.0:
                val, _ = integrate.quad(g1, 0.0, top1, weight="alg", wvar=(-beta, 0.0),
                                        epsabs=0.0, epsrel=1e-12, limit=400)
            else:
                val = _quad(lambda t: g1(t) * t ** (-beta), prev1, top1)
            i1 += val
            prev1 = top1
        if K > 0 and R > half:
            i2 += _quad(g2, prev2, R)
            prev2 = R
        second = half ** q * i2 if K > 0 else 0.0
        out[i] = _bg_prefactor(N, p) * (i1 + second)
    return out


def bg_constant(params: ModelParams, R: float, method: str = "auto") -> float:
    """C_{K,N,p}(R); the closed form for K = 0 unless method='quadrature'."""
    if params.p is None:
        raise ValueError("params.p is required")
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if params.K == 0 and method == "auto":
        return bg_constant_flat(params.N, params.p, R)
    return float(bg_constant_curve(params, [R])[0])


def doubling_threshold(params: ModelParams, R: float) -> float:
    """A = [1/(2 C v(R)^{1/(2p-1)} R^{-2p/(2p-1)})]^{(2p-1)/p}."""
    p = params.p
    C = bg_constant(params, R)
    v = model_volume(params, R)
    base = 1.0 / (2.0 * C * v ** (1 / (2 * p - 1)) * R ** (-2 * p / (2 * p - 1)))
    return base ** ((2 * p - 1) / p)


# ---------------------------------------------------------------------------
# checks


def _require_pole(space: RadialSpace):
    if not space.h.vanishes_at_a:
        raise HypothesisError("ray density does not have vanishing average at the pole")


def _deficit(space: RadialSpace, K: float, p: float, E: float) -> float:
    return space.theta * integral_deficit(space.h, space.kappa, K, p, min(E, space.R_max))


def _upper_radius(space: RadialSpace, K: float) -> float:
    hz = ModelParams(K, space.N).horizon
    return min(space.R_max, hz * (1 - 1e-3)) if math.isfinite(hz) else space.R_max


def check_bishop_gromov(space: RadialSpace, K: float, p: float, points=None,
                        T: StarShapedTruncation | None = None, tol: float = 1e-6,
                        theta_form: bool = True) -> SlackReport:
    """Volume-ratio inequality over all pairs r <= R of ``points``.

    ratio rows: (V_T(R)/v(R))^{1/(2p-1)} - (V_T(r)/v(r))^{1/(2p-1)} <= C(R) rho_p(T,K)^{1/(2p-1)}
    theta rows (T = None, i.e. balls): m(B_R) <= (theta + C(R) rho(B_R)^{1/(2p-1)})^{2p-1} v(R),
    with theta the density of m(B_r) relative to v_{K,N}(r) at the pole.
    """
    _require_pole(space)
    params = ModelParams(K, space.N, p)
    top = _upper_radius(space, K)
    pts = log_points(top * 1e-3, top) if points is None else np.asarray(points, dtype=float)
    if np.any(pts <= 0) or np.any(pts > top * (1 + 1e-12)):
        raise ValueError("radii must lie in (0, min(R_max, horizon))")
    pts = np.sort(pts)
    E = _exit(space, T)
    V = volume_curve(space, pts, T)
    v = np.array([model_volume(params, r) for r in pts])
    C = bg_constant_curve(params, pts) if K != 0 else np.array([bg_constant_flat(space.N, p, r) for r in pts])
    q = 1.0 / (2 * p - 1)
    rho = _deficit(space, K, p, E)
    ratio = (V / v) ** q
    ii, jj = np.triu_indices(pts.size)
    main = SlackReport(np.column_stack([pts[ii], pts[jj]]), ratio[jj] - ratio[ii], C[jj] * rho ** q, tol,
                       columns=("r", "R"))
    reports, labels = [main], ["ratio"]
    if theta_form and T is None:
        th = ratio_density(space)
        rho_ball = np.array([_deficit(space, K, p, R) for R in pts])
        rhs = (th + C * rho_ball ** q) ** (2 * p - 1) * v
        reports.append(SlackReport(np.column_stack([pts, pts]), V, rhs, tol, columns=("r", "R")))
        labels.append("theta")
    return SlackReport.combine(reports, labels, tol, check="quantitative Bishop-Gromov volume ratio")


def check_volume_monotone(space: RadialSpace, K: float, points=None, tol: float = 1e-9) -> SlackReport:
    """r -> V(r)/v_{K,N}(r) non-increasing on consecutive points (relative slack)."""
    params = ModelParams(K, space.N)
    top = _upper_radius(space, K)
    pts = log_points(top * 1e-3, top) if points is None else np.sort(np.asarray(points, dtype=float))
    V = volume_curve(space, pts)
    v = np.array([model_volume(params, r) for r in pts])
    ratio = V / v
    return SlackReport(pts[1:], ratio[1:] / ratio[:-1], np.ones(pts.size - 1), tol,
                       columns=("r",), check="volume ratio monotonicity")


def check_doubling(space: RadialSpace, K: float, p: float, R: float, T: StarShapedTruncation | None = None,
                   points=None, tol: float = 1e-9) -> SlackReport:
    """Doubling inequality on pairs t <= r <= R, written as a ratio against
    v(r)/v(t) so the slack is relative; plus the factor-2 ball form."""
    _require_pole(space)
    params = ModelParams(K, space.N, p)
    if R > _upper_radius(space, K) * (1 + 1e-12):
        raise ValueError("R beyond min(R_max, horizon)")
    E = R if T is None else _exit(space, T)
    if E > R * (1 + 1e-12):
        raise HypothesisError("truncation must lie inside B_R")
    mT = volume_curve(space, [E])[0]
    rho = _deficit(space, K, p, E)
    eps = R * R * (rho / mT) ** (1 / p)
    A = doubling_threshold(params, R)
    if eps > A:
        raise HypothesisError(f"scaling-invariant deficit {eps:.4g} exceeds threshold {A:.4g}")
    C = bg_constant(params, R)
    vR = model_volume(params, R)
    q = 1.0 / (2 * p - 1)
    factor = (1 - 2 * C * vR ** q * R ** (-2 * p * q) * eps ** (p * q)) ** (2 * p - 1)
    pts = log_points(R * 1e-3, R) if points is None else np.sort(np.asarray(points, dtype=float))
    Tr = StarShapedTruncation(E)
    V = volume_curve(space, pts, Tr)
    v = np.array([model_volume(params, r) for r in pts])
    ii, jj = np.triu_indices(pts.size)
    ab = np.column_stack([pts[ii], pts[jj]])
    rel = (V[jj] / V[ii]) / (v[jj] / v[ii])
    reports = [SlackReport(ab, factor * rel, np.ones(ii.size), tol, columns=("t", "r"))]
    labels = ["deficit-corrected"]
    if T is None:
        reports.append(SlackReport(ab, rel, np.full(ii.size, 2.0), tol, columns=("t", "r")))
        labels.append("factor-2 balls")
    return SlackReport.combine(reports, labels, tol, check="uniform doubling")


def f_alpha(space: RadialSpace, K: float, alpha: float, points, T: StarShapedTruncation | None = None) -> np.ndarray:
    """f_alpha at increasing points inside (0, horizon)."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    params = ModelParams(K, space.N)
    pts = np.asarray(points, dtype=float)
    if np.any(pts <= 0) or np.any(pts >= params.horizon) or np.any(np.diff(pts) <= 0):
        raise ValueError("points must increase inside (0, horizon)")
    E = _exit(space, T)
    h, th = space.h, space.theta

    def integrand(s):
        hk = model_density(params, s)
        if hk <= 0:
            raise ZeroDivisionError("model density vanishes")
        psi = max(float(h.slope(s)) - model_mean_curvature(params, s), 0.0)
        return (th * h(s) / hk) ** alpha * psi

    out = np.empty(pts.size)
    acc, prev = 0.0, 0.0
    for i, r in enumerate(pts):
        top = min(r, E)
        if top > prev:
            acc += _quad(integrand, prev, top)
            prev = top
        hk = model_density(params, r)
        lead = (th * h(r) / hk) ** alpha if r < E else 0.0
        out[i] = lead - alpha * acc
    return out


def check_f_alpha_monotone(space: RadialSpace, K: float, alpha: float, T: StarShapedTruncation | None = None,
                           points=None, tol: float = 1e-6) -> SlackReport:
    """f_alpha(r_{i+1}) <= f_alpha(r_i) + tol on consecutive points."""
    params = ModelParams(K, space.N)
    top = min(space.R_max, params.horizon * 0.98 if math.isfinite(params.horizon) else math.inf)
    if points is None:
        pts = log_points(top * 1e-3, top * (1 - 1e-9))
        if T is not None and T.exit < top:
            pts = np.unique(np.append(pts, T.exit))
    else:
        pts = np.sort(np.asarray(points, dtype=float))
    f = f_alpha(space, K, alpha, pts, T)
    return SlackReport(pts[1:], f[1:], f[:-1], tol, columns=("r",), check="f_alpha monotonicity")


# ---------------------------------------------------------------------------
# scaling


def scale(space: RadialSpace, alpha: float, beta: float) -> RadialSpace:
    """Space with d -> alpha d and m -> beta m."""
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    h = space.h
    f0, s0 = h.func, h.slope_func
    c = beta / alpha
    func = None if f0 is None else (lambda t: c * np.asarray(f0(np.asarray(t) / alpha)))
    slope = None if s0 is None else (lambda t: np.asarray(s0(np.asarray(t) / alpha)) / alpha)
    hs = CdDensity(alpha * h.grid, c * h.values, h.N, func=func, slope_func=slope, name=h.name,
                   vanishes_at_a=h.vanishes_at_a)
    return RadialSpace(hs, space.theta, space.kappa.rescaled(alpha), space.name)


def scaling_invariant_deficit(space: RadialSpace, K: float, p: float, R: float,
                              T: StarShapedTruncation | None = None) -> float:
    """R^2 (rho_p(T,K)/m(T))^{1/p}; T defaults to B_R."""
    E = R if T is None else _exit(space, T)
    mT = volume_curve(space, [E])[0]
    return R * R * (_deficit(space, K, p, E) / mT) ** (1 / p)


# ---------------------------------------------------------------------------
# ball chaining (K = 0)


def chaining_parameters(N: float, p: float) -> dict:
    """eta, beta', beta'' and beta = (beta' beta'') v 2 beta'.

    eta is the smallest of 0.9, 0.95, 0.99 with log_{2-eta} eta >= -2 and,
    when p < N, eta^{N/(2p-1)} (2-eta)^{(2p-N)/(2p-1)} < 1.
    """
    ModelParams(0.0, N, p)
    b1 = _bg_prefactor(N, p)
    for eta in (0.9, 0.95, 0.99):
        ratio = eta ** (N / (2 * p - 1)) * (2 - eta) ** ((2 * p - N) / (2 * p - 1))
        if p < N and not ratio < 1:
            continue
        if math.log(eta) / math.log(2 - eta) < -2:
            continue
        b2 = math.inf if ratio == 1 else 1.0 / abs(1 - ratio)
        return {"eta": eta, "beta_prime": b1, "beta_second": b2, "beta": max(b1 * b2, 2 * b1)}
    raise ValueError("no admissible eta in {0.9, 0.95, 0.99}")


def check_ball_chaining(space: RadialSpace, p: float, R: float, points=None, offsets=(0.0, 0.25, 0.5),
                        tol: float = 1e-9) -> SlackReport:
    """Lower bound for m(B_r(y))/m(B_R(x)) with K = 0, y at distance L = f*r.

    Balls centred off the pole are bounded below by B_{r-L}(x) inside
    B_r(y); only rows with a positive right-hand side are kept.
    """
    _require_pole(space)
    N = space.N
    eps = scaling_invariant_deficit(space, 0.0, p, R)
    A0 = doubling_threshold(ModelParams(0.0, N, p), R)
    if eps > A0:
        raise HypothesisError("deficit above the flat doubling threshold")
    beta = chaining_parameters(N, p)["beta"]
    q = 1.0 / (2 * p - 1)
    pts = log_points(R * 1e-3, R) if points is None else np.sort(np.asarray(points, dtype=float))
    mR = volume_curve(space, [R])[0]
    rows, lhs, rhs = [], [], []
    for f in offsets:
        for r in pts:
            L = f * r
            if L + r > R * (1 + 1e-12):
                continue
            x = r / R
            bound = x ** (N * q) * (x ** (2 * N * q) * (1 - beta * eps ** (p * q)) - beta * eps ** (p * q))
            if bound <= 0:
                continue
            inner = r - L
            m = volume_curve(space, [inner])[0] if inner > 0 else 0.0
            rows.append((L, r))
            lhs.append(bound)
            rhs.append((m / mR) ** q)
    return SlackReport(np.array(rows).reshape(-1, 2), np.array(lhs), np.array(rhs), tol,
                       columns=("L", "r"), check="ball chaining lower bound")


# ---------------------------------------------------------------------------
# Myers trend


@dataclass(frozen=True)
class TrendRecord:
    K: float
    N: float
    p: float
    deficits: tuple
    lengths: tuple
    excess: tuple
    exponent: float | None
    band_upper: float
    reference_exponent: float | None
    consistent: bool | None
    limit: float
    decreasing: bool

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def _extrapolate_to_zero(x: np.ndarray, y: np.ndarray) -> float:
    """Polynomial (degree <= 3) through the last points, evaluated at 0."""
    k = min(4, x.size)
    xs, ys = x[-k:], y[-k:]
    if np.ptp(xs) == 0:
        return float(ys[-1])
    coef = np.polyfit(xs, ys, k - 1)
    return float(np.polyval(coef, 0.0))


def myers_trend(family: Sequence[tuple], K: float, p: float, N: float, tol: float = 1e-10) -> TrendRecord:
    """Excess support length over the model horizon along a family whose
    averaged deficit decreases to zero. Members are (h or None, kappa)."""
    if not K > 0:
        raise ValueError("K must be positive")
    ModelParams(K, N, p)
    hz = math.pi * math.sqrt((N - 1) / K)
    deficits, lengths = [], []
    for h, kappa in family:
        L = maximal_support_length(kappa, N, tol)
        if h is None:
            h = synthesize_extremal(kappa, N, n=4001)
        a, b = h.domain
        m = integrate.quad(h, a, b, epsabs=0.0, epsrel=1e-12, limit=400)[0]
        rho = integral_deficit(h, kappa, K, p, b)
        deficits.append(rho / m)
        lengths.append(float(L))
    d = np.array(deficits)
    if np.any(np.diff(d) > 1e-15 * max(1.0, d.max())):
        raise ValueError("family deficits must be non-increasing")
    excess = np.array(lengths) - hz
    band = 2 * p * (N - 1) / ((3 * N - 1) * (2 * p - 1))
    ref = 0.2 if N >= 2 else None
    ok = (d > 0) & (excess > 0)
    exponent = None
    limit = float(excess[-1])
    if ok.sum() >= 2:
        exponent = float(np.polyfit(np.log(d[ok]), np.log(excess[ok]), 1)[0])
    if d.size >= 2 and np.ptp(d) > 0:
        # the support length is smooth in the L^p-averaged deficit (curvature units)
        limit = _extrapolate_to_zero(d ** (1 / p), excess)
    consistent = None if exponent is None or ref is None else bool(exponent >= ref)
    decreasing = bool(np.all(np.diff(excess) <= 1e-12))
    return TrendRecord(K, N, p, tuple(d.tolist()), tuple(lengths), tuple(excess.tolist()), exponent, band,
                       ref, consistent, limit, decreasing)
