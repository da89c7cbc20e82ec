"""One-dimensional CD(kappa, N) densities: verification, extremal synthesis,
mollification, curvature deficits and the 1-D mean-curvature comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate

from .model_spaces import (
    DEFAULT_CFG,
    CurvatureProfile,
    ExtendedNonNeg,
    ModelParams,
    SolverConfig,
    ext_mul,
    model_density,
    model_mean_curvature,
    sigma_values,
    solve_sine,
)

__all__ = [
    "CdDensity",
    "SlackReport",
    "DeficitProfile",
    "SamplingConfig",
    "SlopeStart",
    "HypothesisError",
    "DegenerateCurvatureError",
    "model_cd_density",
    "verify_differential",
    "verify_sigma_inequality",
    "synthesize_extremal",
    "mollify",
    "mean_curvature_deficit",
    "integral_deficit",
    "cumulative_deficit",
    "comparison_alpha",
    "check_comparison_1d",
    "maximal_support_length",
    "default_points",
]

DEFAULT_NODES = 20001
# extremal densities are differentiated numerically, so they are integrated
# more tightly than the default
SYNTH_CFG = SolverConfig(rtol=1e-13, atol=1e-14)
VANISH_EXPONENT = 0.5


class HypothesisError(ValueError):
    """A hypothesis of the inequality being checked does not hold."""


class DegenerateCurvatureError(ValueError):
    """Extremal density blows down inside the starting layer."""


# ---------------------------------------------------------------------------
# finite differences


def _is_uniform(grid: np.ndarray) -> bool:
    d = np.diff(grid)
    return d.size > 0 and float(np.ptp(d)) <= 1e-9 * float(d.mean())


def _stencil_width(grid: np.ndarray) -> int:
    return 2 if grid.size >= 5 and _is_uniform(grid) else 1


def _d1(grid: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Central first derivative at interior nodes (nan where undefined)."""
    out = np.full(y.shape, np.nan)
    if _stencil_width(grid) == 2:
        dx = (grid[-1] - grid[0]) / (grid.size - 1)
        out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * dx)
        return out
    h1, h2 = np.diff(grid)[:-1], np.diff(grid)[1:]
    out[1:-1] = (-h2 / (h1 * (h1 + h2)) * y[:-2] + (h2 - h1) / (h1 * h2) * y[1:-1]
                 + h1 / (h2 * (h1 + h2)) * y[2:])
    return out


def _d2(grid: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.full(y.shape, np.nan)
    if _stencil_width(grid) == 2:
        dx = (grid[-1] - grid[0]) / (grid.size - 1)
        out[2:-2] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * dx * dx)
        return out
    h1, h2 = np.diff(grid)[:-1], np.diff(grid)[1:]
    out[1:-1] = 2 * (y[:-2] / (h1 * (h1 + h2)) - y[1:-1] / (h1 * h2) + y[2:] / (h2 * (h1 + h2)))
    return out


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class CdDensity:
    """Non-negative density h on [grid[0], grid[-1]] with dimension N.

    ``func`` and ``slope_func`` optionally carry an exact evaluator of h and
    of (log h)'; otherwise h is interpolated (monotone cubic) from the grid
    and (log h)' comes from central differences.
    """

    grid: np.ndarray
    values: np.ndarray
    N: float
    func: Callable | None = None
    slope_func: Callable | None = None
    name: str = ""
    vanishes_at_a: bool | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 3:
            raise ValueError("density needs matching 1-D grid and values with >= 3 nodes")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] < 0:
            raise ValueError("density domain must start at a >= 0")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite and non-negative")
        if not self.N > 1:
            raise ValueError("N must exceed 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.vanishes_at_a is None:
            object.__setattr__(self, "vanishes_at_a", self._fit_vanishing())

    @classmethod
    def from_function(cls, f: Callable, a: float, b: float, N: float, n: int = DEFAULT_NODES,
                      slope: Callable | None = None, name: str = "", vanishes_at_a: bool | None = None) -> CdDensity:
        grid = np.linspace(a, b, n)
        values = np.maximum(np.asarray(f(grid), dtype=float), 0.0)
        return cls(grid, values, N, func=f, slope_func=slope, name=name, vanishes_at_a=vanishes_at_a)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def length(self) -> float:
        return float(self.grid[-1] - self.grid[0])

    def _fit_vanishing(self) -> bool:
        if self.values[0] > 0:
            return False
        t = self.grid[1:11] - self.grid[0]
        y = self.values[1:11]
        if np.any(y <= 0):
            return False
        gamma = np.polyfit(np.log(t), np.log(y), 1)[0]
        return bool(gamma >= VANISH_EXPONENT)

    def exponent_fit(self) -> tuple[float, float]:
        """(gamma, c) of h ~ c (t-a)^gamma over the first decade of nodes."""
        t = self.grid[1:11] - self.grid[0]
        y = self.values[1:11]
        gamma, logc = np.polyfit(np.log(t), np.log(y), 1)
        return float(gamma), float(math.exp(logc))

    @cached_property
    def _interp(self):
        return interpolate.PchipInterpolator(self.grid, self.values, extrapolate=False)

    def __call__(self, t):
        a, b = self.domain
        arr = np.asarray(t, dtype=float)
        tol = 1e-12 * max(1.0, b)
        if np.any(arr < a - tol) or np.any(arr > b + tol):
            raise ValueError(f"abscissa outside density domain [{a}, {b}]")
        arr = np.clip(arr, a, b)
        out = self.func(arr) if self.func is not None else self._interp(arr)
        out = np.maximum(np.asarray(out, dtype=float), 0.0)
        return float(out) if out.ndim == 0 else out

    @cached_property
    def log_slope(self) -> np.ndarray:
        """(log h)' at the nodes (nan where no central stencil fits)."""
        if self.slope_func is not None:
            out = np.full(self.grid.shape, np.nan)
            inner = self.values > 0
            inner[0] = inner[-1] = False
            out[inner] = self.slope_func(self.grid[inner])
            return out
        with np.errstate(divide="ignore"):
            logh = np.log(self.values)
        out = _d1(self.grid, logh)
        out[~np.isfinite(out)] = np.nan
        return out

    def slope(self, t):
        """(log h)' at arbitrary interior points."""
        if self.slope_func is not None:
            return self.slope_func(t)
        s = self.log_slope
        ok = np.isfinite(s)
        return np.interp(t, self.grid[ok], s[ok])


@dataclass(frozen=True, eq=False)
class SlackReport:
    """Pointwise record of an inequality lhs <= rhs; slack = rhs - lhs."""

    abscissae: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tol: float
    columns: tuple = ("abscissa",)
    labels: np.ndarray | None = None
    check: str = ""
    slack: np.ndarray = field(init=False)

    def __post_init__(self):
        ab = np.asarray(self.abscissae, dtype=float)
        lhs = np.asarray(self.lhs, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        if ab.shape[0] != lhs.shape[0] or lhs.shape != rhs.shape:
            raise ValueError("SlackReport arrays must have equal length")
        object.__setattr__(self, "abscissae", ab)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)
        with np.errstate(invalid="ignore"):
            slack = rhs - lhs
        slack = np.where(np.isposinf(lhs) & ~np.isposinf(rhs), -np.inf, slack)
        slack = np.where(np.isposinf(rhs) & ~np.isposinf(lhs), np.inf, slack)
        slack = np.where(np.isposinf(rhs) & np.isposinf(lhs), 0.0, slack)
        object.__setattr__(self, "slack", slack)
        if self.labels is not None:
            object.__setattr__(self, "labels", np.asarray(self.labels, dtype=object))

    def __len__(self) -> int:
        return self.lhs.shape[0]

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slack)) if len(self) else math.inf

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tol

    @property
    def worst_index(self) -> int:
        return int(np.argmin(self.slack))

    def worst(self) -> dict:
        i = self.worst_index
        ab = self.abscissae[i]
        return {"abscissa": ab.tolist() if np.ndim(ab) else float(ab), "lhs": float(self.lhs[i]),
                "rhs": float(self.rhs[i]), "slack": float(self.slack[i])}

    @staticmethod
    def combine(reports: Sequence[SlackReport], labels: Sequence[str], tol: float | None = None,
                check: str = "") -> SlackReport:
        reports = list(reports)
        cols = reports[0].columns
        ab = np.concatenate([r.abscissae for r in reports])
        lab = np.concatenate([np.full(len(r), l, dtype=object) for r, l in zip(reports, labels)])
        return SlackReport(ab, np.concatenate([r.lhs for r in reports]), np.concatenate([r.rhs for r in reports]),
                           reports[0].tol if tol is None else tol, cols, lab, check or reports[0].check)

    def to_csv(self) -> str:
        cols = list(self.columns)
        head = cols + (["label"] if self.labels is not None else []) + ["lhs", "rhs", "slack"]
        lines = [",".join(head)]
        ab = self.abscissae.reshape(len(self), -1)
        for i in range(len(self)):
            row = [repr(float(x)) for x in ab[i]]
            if self.labels is not None:
                row.append(str(self.labels[i]))
            row += [repr(float(self.lhs[i])), repr(float(self.rhs[i])), repr(float(self.slack[i]))]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class DeficitProfile:
    abscissae: np.ndarray
    psi: np.ndarray
    rho_p_cumulative: np.ndarray | None = None


@dataclass(frozen=True)
class SamplingConfig:
    """Triples (x0, x1, t) for the distortion inequality."""

    n: int = 200
    seed: int = 0
    triples: tuple | None = None
    midpoints: bool = False


@dataclass(frozen=True)
class SlopeStart:
    """Non-singular start: (log h)'(t0) = u0 with h(t0) > 0."""

    t0: float
    u0: float


# ---------------------------------------------------------------------------
# constructors


def model_cd_density(K: float, N: float, R: float | None = None, n: int = DEFAULT_NODES,
                     scale: float = 1.0) -> CdDensity:
    """scale * h_{K,N} on [0, R] (default: the model horizon) with exact slope."""
    params = ModelParams(K, N)
    hz = params.horizon
    if R is None:
        if not math.isfinite(hz):
            raise ValueError("K <= 0 model needs an explicit R")
        R = hz
    if R > hz * (1 + 1e-14):
        raise ValueError("R beyond the model horizon")
    R = min(R, hz)

    def f(t):
        return scale * model_density(params, np.minimum(t, hz))

    def slope(t):
        return model_mean_curvature(params, t)

    return CdDensity.from_function(f, 0.0, R, N, n, slope=slope, name=f"model(K={K},N={N})")


# ---------------------------------------------------------------------------
# verification


def verify_differential(h: CdDensity, kappa: CurvatureProfile, tol: float = 1e-6,
                        margin: float = 0.02) -> SlackReport:
    """Pointwise (log h)'' + ((log h)')^2/(N-1) <= -kappa on interior nodes.

    A boundary layer of ``margin`` times the interval length is skipped at
    each end besides the stencil nodes themselves.
    """
    g, y = h.grid, h.values
    a, b = h.domain
    w = _stencil_width(g)
    idx = np.arange(w, g.size - w)
    m = margin * (b - a)
    idx = idx[(g[idx] >= a + m) & (g[idx] <= b - m)]
    if idx.size == 0:
        raise ValueError("no interior evaluation nodes")
    lo, hi = idx[0] - w, idx[-1] + w
    sub = g[lo:hi + 1]
    if np.any(y[lo:hi + 1] <= 0):
        raise ValueError("density vanishes at an interior evaluation point")
    if h.slope_func is not None:
        s = np.asarray(h.slope_func(sub), dtype=float)
        d1, d2 = s, _d1(sub, s)
    else:
        logh = np.log(y[lo:hi + 1])
        d1, d2 = _d1(sub, logh), _d2(sub, logh)
    inner = slice(w, sub.size - w)
    t = sub[inner]
    lhs = d2[inner] + d1[inner] ** 2 / (h.N - 1)
    rhs = -np.asarray(kappa(t), dtype=float)
    return SlackReport(t, lhs, rhs, tol, check="differential CD(kappa,N) inequality")


def _sample_triples(h: CdDensity, samples: SamplingConfig) -> np.ndarray:
    if samples.triples is not None:
        return np.asarray(samples.triples, dtype=float).reshape(-1, 3)
    a, b = h.domain
    rng = np.random.default_rng(samples.seed)
    x = rng.uniform(a, b, size=(samples.n, 2))
    t = rng.uniform(0.0, 1.0, size=(samples.n, 1))
    if samples.midpoints:
        t[:] = 0.5
    return np.hstack([x, t])


def verify_sigma_inequality(h: CdDensity, kappa: CurvatureProfile, samples: SamplingConfig = SamplingConfig(),
                            tol: float = 1e-7, cfg: SolverConfig = DEFAULT_CFG) -> SlackReport:
    """Distortion form of the CD condition on sampled triples (x0, x1, t).

    lhs = sigma^{(1-t)}_{kappa^-/(N-1)} h(x0)^{1/(N-1)} + sigma^{(t)}_{kappa^+/(N-1)} h(x1)^{1/(N-1)}
    rhs = h((1-t) x0 + t x1)^{1/(N-1)}
    """
    tri = _sample_triples(h, samples)
    n1 = h.N - 1
    lhs = np.empty(len(tri))
    rhs = np.empty(len(tri))
    for i, (x0, x1, t) in enumerate(tri):
        xt = (1 - t) * x0 + t * x1
        rhs[i] = h(xt) ** (1 / n1)
        theta = abs(x1 - x0)
        if theta < 1e-12:
            lhs[i] = ((1 - t) * h(x0) ** (1 / n1) + t * h(x1) ** (1 / n1))
            continue
        fwd = x1 > x0
        if kappa.kind == "constant":
            kc = kappa.restrict(x0, theta, reverse=not fwd).times(1 / n1)
            s_plus, s_minus = sigma_values(kc, [t, 1 - t], theta, cfg)
        else:
            kp = kappa.restrict(x0, theta, reverse=not fwd).times(1 / n1)
            km = kappa.restrict(x1, theta, reverse=fwd).times(1 / n1)
            s_plus = sigma_values(kp, [t], theta, cfg)[0]
            s_minus = sigma_values(km, [1 - t], theta, cfg)[0]
        lhs[i] = ext_mul(s_minus, h(x0) ** (1 / n1)) + ext_mul(s_plus, h(x1) ** (1 / n1))
    return SlackReport(tri, lhs, rhs, tol, columns=("x0", "x1", "t"), check="distortion CD(kappa,N) inequality")


# ---------------------------------------------------------------------------
# synthesis and support length


def _search_end(kappa: CurvatureProfile, N: float, start: float, length: float | None) -> float | None:
    a, b = kappa.domain
    if length is not None:
        return min(b, start + length)
    if math.isfinite(b):
        return b
    if kappa.lower_bound > 0:
        return start + math.pi * math.sqrt((N - 1) / kappa.lower_bound) * (1 + 1e-9) + 1e-9
    return None


def synthesize_extremal(kappa: CurvatureProfile, N: float, pole: SlopeStart | None = None,
                        n: int = DEFAULT_NODES, length: float | None = None,
                        cfg: SolverConfig = SYNTH_CFG) -> CdDensity:
    """Density saturating the differential inequality for kappa.

    With s = h^{1/(N-1)} the Riccati equation u' = -kappa - u^2/(N-1) for
    u = (log h)' becomes s'' + kappa/(N-1) s = 0. The pole start is
    s(a)=0, s'(a)=1 (so u ~ (N-1)/(t-a)); a :class:`SlopeStart` uses
    s(t0)=1, s'(t0)=u0/(N-1). The density stops at the first zero of s
    (blow-down of u) and is normalised to max h = 1.
    """
    if not N > 1:
        raise ValueError("N must exceed 1")
    a = kappa.domain[0]
    start = a if pole is None else float(pole.t0)
    end = _search_end(kappa, N, start, length)
    if end is None:
        raise ValueError("unbounded domain without a positive lower bound: pass length")
    c = kappa.times(1.0 / (N - 1))
    if pole is None:
        sol = solve_sine(c, end, cfg)
        layer = 1e-4 * (end - a)
        if sol.zero is not None and sol.zero - a < layer:
            raise DegenerateCurvatureError("blow-down inside the starting layer")
    else:
        sol = solve_sine(c, end, cfg, v0=1.0, dv0=pole.u0 / (N - 1), start=start)
    stop = sol.zero if sol.zero is not None else end
    grid = np.linspace(start, stop, n)
    s = np.maximum(sol.value(grid), 0.0)
    if sol.zero is not None:
        s[-1] = 0.0
    if pole is None:
        s[0] = 0.0
    hv = s ** (N - 1)
    top = float(hv.max())
    n1 = N - 1
    dense = sol.dense

    def f(t):
        return np.maximum(dense(t)[0], 0.0) ** n1 / top

    def slope(t):
        v = dense(t)
        return n1 * v[1] / v[0]

    return CdDensity(grid, hv / top, N, func=f, slope_func=slope, name="extremal",
                     vanishes_at_a=True if pole is None else False)


def maximal_support_length(kappa: CurvatureProfile, N: float, tol: float = 1e-10,
                           cfg: SolverConfig = DEFAULT_CFG) -> ExtendedNonNeg:
    """Blow-down abscissa (minus a) of the pole-started extremal density.

    Returns inf when no blow-down occurs and kappa <= 0; when kappa has
    positive parts but the domain ends first, the domain length.
    """
    a, b = kappa.domain
    sup = kappa.sup()
    nonpositive = sup is not None and sup <= 0
    end = _search_end(kappa, N, a, None)
    if end is None:
        if nonpositive:
            return ExtendedNonNeg(math.inf)
        raise ValueError("cannot bound the search on an unbounded domain")
    sol = solve_sine(kappa.times(1.0 / (N - 1)), end, replace(cfg, zero_tol=tol))
    if sol.zero is not None:
        return ExtendedNonNeg(sol.zero - a)
    if nonpositive or not math.isfinite(b):
        return ExtendedNonNeg(math.inf)
    return ExtendedNonNeg(b - a)


# ---------------------------------------------------------------------------
# mollification


def _bump_weights(eps: float, dx: float) -> np.ndarray:
    J = int(math.ceil(eps / dx)) - 1
    x = np.arange(-J, J + 1) * dx / eps
    w = np.exp(-1.0 / (1.0 - x * x))
    return w / w.sum()


def mollify(h: CdDensity, kappa: CurvatureProfile, eps: float) -> tuple[CdDensity, CurvatureProfile]:
    """h_eps = exp((log h) * eta_eps) and kappa_eps = kappa * eta_eps.

    eta is the standard bump C exp(-1/(1-x^2)) on (-1, 1). Convolutions are
    discrete on the (uniform) grid with the weights normalised to unit mass.
    """
    a, b = h.domain
    if not 0 < eps < (b - a) / 2:
        raise ValueError("eps must lie in (0, (b-a)/2)")
    g, y = h.grid, h.values
    if not _is_uniform(g):
        g = np.linspace(a, b, g.size)
        y = h(g)
    dx = (b - a) / (g.size - 1)
    w = _bump_weights(eps, dx)
    J = (w.size - 1) // 2
    if J < 2:
        raise ValueError("eps too small for the grid spacing")
    with np.errstate(divide="ignore"):
        logy = np.log(y)
    centers = np.arange(J, g.size - J)
    conv = np.convolve(logy, w[::-1], mode="valid")
    keep = np.isfinite(conv) & (g[centers] > a + eps - 1e-12) & (g[centers] < b - eps + 1e-12)
    if keep.sum() < 5:
        raise ValueError("eps too large for the domain")
    gout = g[centers][keep]
    h_eps = CdDensity(gout, np.exp(conv[keep]), h.N, name=f"{h.name}*eta_{eps}", vanishes_at_a=False)
    if kappa.kind == "constant":
        k_eps = CurvatureProfile.constant(kappa.value, (float(gout[0]), float(gout[-1])))
    else:
        kconv = np.convolve(kappa.raw(g), w[::-1], mode="valid")
        k_eps = CurvatureProfile.sampled(gout, kconv[keep])
    return h_eps, k_eps


# ---------------------------------------------------------------------------
# deficits


def default_points(a: float, b: float, per_decade: int = 32, decades: int = 3, uniform: int = 257) -> np.ndarray:
    """Mixed logarithmic/uniform grid inside the open interval (a, b)."""
    L = b - a
    logs = a + L * np.logspace(-decades, 0, per_decade * decades + 1)
    uni = np.linspace(a, b, uniform)
    pts = np.unique(np.concatenate([logs, uni]))
    return pts[(pts > a) & (pts < b)]


def integral_deficit(h: CdDensity, kappa: CurvatureProfile, K: float, p: float, r: float,
                     start: float | None = None) -> float:
    """int_a^r |min(kappa - K, 0)|^p h dt."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = h.domain[0] if start is None else start
    if r < a or r > h.domain[1] * (1 + 1e-14):
        raise ValueError("r outside the density domain")
    if r == a:
        return 0.0
    if kappa.kind == "constant":
        d = min(kappa.value - K, 0.0)
        if d == 0.0:
            return 0.0
        return abs(d) ** p * _quad(h, a, r)
    f = lambda t: abs(min(kappa.raw(t) - K, 0.0)) ** p * h(t)
    val, _ = integrate.quad(f, a, r, epsabs=1e-15, epsrel=1e-12, limit=400)
    return val


def _quad(f: Callable, a: float, b: float) -> float:
    val, _ = integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-12, limit=400)
    return val


def cumulative_deficit(h: CdDensity, kappa: CurvatureProfile, K: float, p: float, points) -> np.ndarray:
    """rho(r) = int_a^r |min(kappa-K,0)|^p h at increasing points."""
    pts = np.asarray(points, dtype=float)
    if np.any(np.diff(pts) < 0):
        raise ValueError("points must be increasing")
    out = np.empty(pts.size)
    acc, prev = 0.0, h.domain[0]
    for i, r in enumerate(pts):
        acc += integral_deficit(h, kappa, K, p, r, start=prev)
        out[i] = acc
        prev = r
    return out


def mean_curvature_deficit(h: CdDensity, K: float, kappa: CurvatureProfile | None = None,
                           p: float | None = None, points=None) -> DeficitProfile:
    """psi = ((log h)' - H_{K,N}) v 0, optionally with the cumulative deficit."""
    params = ModelParams(K, h.N)
    a, b = h.domain
    upper = min(b, params.horizon)
    if points is None:
        points = default_points(a, upper)
    pts = np.asarray(points, dtype=float)
    if np.any(pts <= a) or np.any(pts >= params.horizon) or np.any(pts > b):
        raise ValueError("evaluation points must lie in (a, min(b, horizon))")
    psi = np.maximum(np.asarray(h.slope(pts), dtype=float) - model_mean_curvature(params, pts - a), 0.0)
    rho = None
    if kappa is not None and p is not None:
        rho = cumulative_deficit(h, kappa, K, p, pts)
    return DeficitProfile(pts, psi, rho)


def comparison_alpha(N: float, p: float) -> float:
    """alpha_{N,p} = (2p-1)^p ((N-1)/(2p-N))^{p-1}."""
    if not p > N / 2:
        raise ValueError("p must exceed N/2")
    return (2 * p - 1) ** p * ((N - 1) / (2 * p - N)) ** (p - 1)


def check_comparison_1d(h: CdDensity, kappa: CurvatureProfile, K: float, p: float, points=None,
                        tol: float = 1e-6) -> SlackReport:
    """psi^{2p-1} h <= alpha_{N,p} rho on (0, half-horizon ∧ D) and the
    sin^{4p-N-1}-weighted variant on (half-horizon, horizon ∧ D)."""
    if not h.vanishes_at_a:
        raise HypothesisError("density does not have vanishing average at the start point")
    N = h.N
    alpha = comparison_alpha(N, p)
    a, b = h.domain
    D = b - a
    params = ModelParams(K, N)
    half = params.half_horizon
    e1 = min(half, D)
    if points is None:
        p1 = default_points(0.0, e1)
        if half <= D:
            p1 = np.append(p1, half)
        p2 = default_points(half, min(2 * half, D)) if K > 0 and D > half else np.empty(0)
    else:
        pts = np.asarray(points, dtype=float)
        p1 = pts[(pts > 0) & (pts <= e1)]
        p2 = pts[(pts > half) & (pts < min(2 * half, D))] if K > 0 else np.empty(0)
    allp = np.concatenate([p1, p2])
    prof = mean_curvature_deficit(h, K, kappa, p, a + allp)
    psi, rho = prof.psi, prof.rho_p_cumulative
    hv = h(a + allp)
    lhs = psi ** (2 * p - 1) * hv
    n1 = p1.size
    if p2.size:
        w = np.sin(math.sqrt(K / (N - 1)) * p2) ** (4 * p - N - 1)
        lhs[n1:] *= w
    labels = ["half-horizon"] * n1 + ["beyond-half-horizon"] * p2.size
    return SlackReport(allp, lhs, alpha * rho, tol, columns=("r",), labels=labels,
                       check="1-D mean curvature vs integral deficit comparison")
