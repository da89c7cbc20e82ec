"""Model-space quantities: generalized sine, distortion coefficients, the
(K,N) model density/volume/mean curvature and the monotone Lipschitz
approximation of a curvature profile."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "CurvatureProfile",
    "ModelParams",
    "SolverConfig",
    "ExtendedNonNeg",
    "SineSolution",
    "SolverError",
    "ext_mul",
    "solve_sine",
    "generalized_sine",
    "sigma",
    "sigma_values",
    "tau",
    "sin_k",
    "sin_k_prime",
    "model_density",
    "model_volume",
    "model_mean_curvature",
    "monotone_approximation",
]


class SolverError(RuntimeError):
    """ODE integration failed; ``last_t`` is the last abscissa reached."""

    def __init__(self, message: str, last_t: float):
        super().__init__(f"{message} (last abscissa {last_t!r})")
        self.last_t = last_t


class ExtendedNonNeg(float):
    """Non-negative real or +inf, with an optional tie flag.

    Float arithmetic applies, except that products should go through
    :func:`ext_mul` to get ``0 * inf = 0``.
    """

    tie: bool

    def __new__(cls, value: float, tie: bool = False):
        value = float(value)
        if math.isnan(value) or value < 0.0:
            raise ValueError(f"extended non-negative value expected, got {value!r}")
        obj = super().__new__(cls, value)
        obj.tie = tie
        return obj

    @property
    def is_inf(self) -> bool:
        return math.isinf(self)

    def __repr__(self) -> str:
        return f"ExtendedNonNeg({float(self)!r}{', tie' if self.tie else ''})"


def ext_mul(a: float, b: float) -> float:
    """Product with the conventions r*inf = inf for r > 0 and 0*inf = 0."""
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-10
    atol: float = 1e-10
    zero_tol: float = 1e-12
    tie_tol: float = 1e-9
    quad_tol: float = 1e-12
    method: str = "DOP853"


DEFAULT_CFG = SolverConfig()


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """A lower curvature bound kappa on an interval.

    Use the constructors :meth:`constant`, :meth:`closed_form` and
    :meth:`sampled` rather than the raw fields.
    """

    domain: tuple[float, float]
    kind: str
    lower_bound: float
    value: float | None = None
    func: Callable | None = None
    grid: np.ndarray | None = None
    values: np.ndarray | None = None
    upper_bound: float | None = None
    spec: dict = field(default_factory=dict)

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, K: float, domain: tuple[float, float] = (0.0, math.inf)) -> CurvatureProfile:
        K = float(K)
        return cls(_check_domain(domain), "constant", K, value=K, upper_bound=K,
                   spec={"kind": "constant", "params": {"value": K}})

    @classmethod
    def closed_form(cls, func: Callable, domain: tuple[float, float], lower_bound: float | None = None,
                    upper_bound: float | None = None, spec: dict | None = None) -> CurvatureProfile:
        domain = _check_domain(domain)
        if lower_bound is None or (upper_bound is None and math.isfinite(domain[1])):
            if not math.isfinite(domain[1]):
                raise ValueError("closed-form profile on an unbounded domain needs an explicit lower_bound")
            probe = np.asarray(func(np.linspace(domain[0], domain[1], 4097)), dtype=float)
            if lower_bound is None:
                lower_bound = float(probe.min())
            if upper_bound is None:
                upper_bound = float(probe.max())
        return cls(domain, "closed-form", float(lower_bound), func=func, upper_bound=upper_bound,
                   spec=spec or {"kind": "closed-form", "params": {}})

    @classmethod
    def sampled(cls, grid, values) -> CurvatureProfile:
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("sampled profile needs matching 1-D grid and values with >= 2 nodes")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        return cls((float(grid[0]), float(grid[-1])), "sampled", float(values.min()),
                   grid=grid, values=values, upper_bound=float(values.max()),
                   spec={"kind": "sampled", "params": {"grid": grid.tolist(), "values": values.tolist()}})

    # evaluation ---------------------------------------------------------
    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def raw(self, r):
        """Evaluate without domain checks (used inside integrators)."""
        if self.kind == "constant":
            if np.ndim(r) == 0:
                return self.value
            return np.full(np.shape(r), self.value)
        if self.kind == "sampled":
            out = np.interp(r, self.grid, self.values)
            return float(out) if np.ndim(r) == 0 else out
        out = self.func(r)
        return float(out) if np.ndim(r) == 0 else np.asarray(out, dtype=float)

    def __call__(self, r):
        a, b = self.domain
        arr = np.asarray(r, dtype=float)
        slack = 1e-12 * max(1.0, abs(a), abs(b) if math.isfinite(b) else 1.0)
        if np.any(arr < a - slack) or np.any(arr > b + slack):
            raise ValueError(f"abscissa outside curvature domain [{a}, {b}]")
        out = self.raw(np.clip(arr, a, b) if arr.ndim else min(max(float(arr), a), b))
        if np.any(np.asarray(out) < self.lower_bound - 1e-12 * max(1.0, abs(self.lower_bound))):
            raise ValueError("curvature profile dropped below its declared lower bound")
        return out

    def sup(self) -> float | None:
        return self.upper_bound

    # derived profiles ---------------------------------------------------
    def times(self, c: float) -> CurvatureProfile:
        """The profile c*kappa for c > 0."""
        if c <= 0:
            raise ValueError("scaling factor must be positive")
        if self.kind == "constant":
            return CurvatureProfile.constant(self.value * c, self.domain)
        if self.kind == "sampled":
            return CurvatureProfile.sampled(self.grid, self.values * c)
        f = self.func
        ub = None if self.upper_bound is None else self.upper_bound * c
        return CurvatureProfile.closed_form(lambda r: c * np.asarray(f(r)), self.domain,
                                            self.lower_bound * c, ub, spec=self.spec)

    def restrict(self, start: float, length: float, reverse: bool = False) -> CurvatureProfile:
        """Profile s -> kappa(start +- s) on [0, length]."""
        a, b = self.domain
        end = start - length if reverse else start + length
        tol = 1e-12 * max(1.0, abs(start), abs(length))
        if min(start, end) < a - tol or max(start, end) > b + tol:
            raise ValueError("restriction leaves the curvature domain")
        if self.kind == "constant":
            return CurvatureProfile.constant(self.value, (0.0, length))
        sgn = -1.0 if reverse else 1.0
        if self.kind == "sampled":
            s_nodes = sgn * (self.grid - start)
            inside = (s_nodes > 0) & (s_nodes < length)
            s = np.unique(np.concatenate([[0.0, length], s_nodes[inside]]))
            return CurvatureProfile.sampled(s, self.raw(start + sgn * s))
        f = self.func
        return CurvatureProfile.closed_form(lambda s: f(start + sgn * np.asarray(s)), (0.0, length),
                                            self.lower_bound, self.upper_bound, spec=self.spec)

    def rescaled(self, alpha: float) -> CurvatureProfile:
        """kappa(./alpha)/alpha^2 on alpha*domain (metric scaling d -> alpha d)."""
        a, b = self.domain
        dom = (alpha * a, alpha * b)
        if self.kind == "constant":
            return CurvatureProfile.constant(self.value / alpha**2, dom)
        if self.kind == "sampled":
            return CurvatureProfile.sampled(alpha * self.grid, self.values / alpha**2)
        f = self.func
        ub = None if self.upper_bound is None else self.upper_bound / alpha**2
        return CurvatureProfile.closed_form(lambda r: np.asarray(f(np.asarray(r) / alpha)) / alpha**2, dom,
                                            self.lower_bound / alpha**2, ub, spec=self.spec)


def _check_domain(domain) -> tuple[float, float]:
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise ValueError(f"degenerate domain [{a}, {b}]")
    return a, b


@dataclass(frozen=True)
class ModelParams:
    K: float
    N: float
    p: float | None = None

    def __post_init__(self):
        if not self.N > 1:
            raise ValueError(f"N must exceed 1, got {self.N}")
        if self.p is not None and not self.p > self.N / 2:
            raise ValueError(f"p must exceed N/2, got p={self.p}, N={self.N}")

    @property
    def c(self) -> float:
        """Curvature of the model sine, K/(N-1)."""
        return self.K / (self.N - 1)

    @property
    def horizon(self) -> float:
        return math.pi * math.sqrt((self.N - 1) / self.K) if self.K > 0 else math.inf

    @property
    def half_horizon(self) -> float:
        return 0.5 * self.horizon


# ---------------------------------------------------------------------------
# generalized sine by ODE


@dataclass(frozen=True, eq=False)
class SineSolution:
    """Dense solution of v'' + kappa v = 0 on [start, end]."""

    start: float
    end: float
    dense: Callable
    zero: float | None

    def value(self, t):
        return self.dense(t)[0]

    def derivative(self, t):
        return self.dense(t)[1]


def solve_sine(kappa: CurvatureProfile, end: float, cfg: SolverConfig = DEFAULT_CFG,
               v0: float = 0.0, dv0: float = 1.0, start: float | None = None) -> SineSolution:
    """Integrate v'' + kappa v = 0 from ``start`` (default: domain start)."""
    a = kappa.domain[0] if start is None else start
    if end <= a:
        raise ValueError("integration end must exceed the start")
    k = kappa.raw

    def rhs(t, y):
        return (y[1], -k(t) * y[0])

    sol = integrate.solve_ivp(rhs, (a, end), (v0, dv0), method=cfg.method, rtol=cfg.rtol,
                              atol=cfg.atol, dense_output=True)
    if sol.status != 0:
        raise SolverError(sol.message, float(sol.t[-1]))
    zero = _first_zero(sol, cfg.zero_tol, skip_start=(v0 == 0.0))
    return SineSolution(a, end, sol.sol, zero)


def _first_zero(sol, xtol: float, skip_start: bool) -> float | None:
    ts, ys = sol.t, sol.y[0]
    first = 1 if skip_start else 0
    sign0 = np.sign(ys[first]) if ys[first] != 0 else np.sign(sol.y[1][first])
    for i in range(first + 1, len(ts)):
        if ys[i] == 0.0:
            return float(ts[i])
        if np.sign(ys[i]) != sign0:
            f = lambda t: sol.sol(t)[0]
            return float(optimize.brentq(f, ts[i - 1], ts[i], xtol=xtol, rtol=4 * np.finfo(float).eps))
    return None


def generalized_sine(kappa: CurvatureProfile, t: float, cfg: SolverConfig = DEFAULT_CFG) -> float:
    """s_kappa(t): solution of v'' + kappa v = 0 with v(a)=0, v'(a)=1."""
    a, b = kappa.domain
    if not a <= t <= b:
        raise ValueError(f"t={t} outside the curvature domain [{a}, {b}]")
    if t == a:
        return 0.0
    return float(solve_sine(kappa, t, cfg).value(t))


def _sine_on(kappa: CurvatureProfile, theta: float, cfg: SolverConfig):
    """Solve to theta; return (solution, infinite?, tie?)."""
    a, b = kappa.domain
    if theta <= 0:
        raise ValueError("theta must be positive")
    if theta > (b - a) * (1 + 1e-12):
        raise ValueError("theta exceeds the length of the curvature domain")
    sol = solve_sine(kappa, a + theta, cfg)
    end = a + theta
    if sol.zero is not None:
        return sol, True, abs(sol.zero - end) <= cfg.tie_tol * max(1.0, theta)
    v, dv = sol.value(end), sol.derivative(end)
    if abs(v) <= cfg.tie_tol * max(abs(dv), 1e-300):
        return sol, True, True
    return sol, False, False


def sigma(kappa: CurvatureProfile, t: float, theta: float, cfg: SolverConfig = DEFAULT_CFG) -> ExtendedNonNeg:
    """Distortion coefficient s_kappa(t theta)/s_kappa(theta), or inf."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    sol, infinite, tie = _sine_on(kappa, theta, cfg)
    if infinite:
        return ExtendedNonNeg(math.inf, tie)
    if t == 0.0:
        return ExtendedNonNeg(0.0)
    if t == 1.0:
        return ExtendedNonNeg(1.0)
    a = kappa.domain[0]
    return ExtendedNonNeg(max(sol.value(a + t * theta) / sol.value(a + theta), 0.0))


def sigma_values(kappa: CurvatureProfile, ts, theta: float, cfg: SolverConfig = DEFAULT_CFG) -> np.ndarray:
    """Vectorised sigma over several t for one geodesic (single ODE solve)."""
    ts = np.asarray(ts, dtype=float)
    sol, infinite, _ = _sine_on(kappa, theta, cfg)
    if infinite:
        return np.full(ts.shape, math.inf)
    a = kappa.domain[0]
    out = np.maximum(sol.value(a + ts * theta) / sol.value(a + theta), 0.0)
    out = np.where(ts == 0.0, 0.0, np.where(ts == 1.0, 1.0, out))
    return out


def tau(kappa: CurvatureProfile, N: float, t: float, theta: float, cfg: SolverConfig = DEFAULT_CFG) -> ExtendedNonNeg:
    """t^{1/N} * sigma_{kappa/(N-1)}^{(t)}(theta)^{(N-1)/N}."""
    if not N > 1:
        raise ValueError("N must exceed 1")
    s = sigma(kappa.times(1.0 / (N - 1)), t, theta, cfg)
    return ExtendedNonNeg(ext_mul(t ** (1.0 / N), float(s) ** ((N - 1) / N)), s.tie)


# ---------------------------------------------------------------------------
# closed-form model quantities


def sin_k(c: float, t):
    """Model sine for constant curvature c (unnormalized sine of t*sqrt(c))."""
    t = np.asarray(t, dtype=float)
    if c > 0:
        out = np.sin(np.sqrt(c) * t) / np.sqrt(c)
    elif c < 0:
        out = np.sinh(np.sqrt(-c) * t) / np.sqrt(-c)
    else:
        out = t.copy()
    return float(out) if out.ndim == 0 else out


def sin_k_prime(c: float, t):
    t = np.asarray(t, dtype=float)
    if c > 0:
        out = np.cos(np.sqrt(c) * t)
    elif c < 0:
        out = np.cosh(np.sqrt(-c) * t)
    else:
        out = np.ones_like(t)
    return float(out) if out.ndim == 0 else out


def _check_radius(params: ModelParams, r, open_end: bool = False, open_start: bool = False):
    r = np.asarray(r, dtype=float)
    hz = params.horizon
    if np.any(r < 0) or (open_start and np.any(r <= 0)):
        raise ValueError("radius must be non-negative" + (" and positive" if open_start else ""))
    if math.isfinite(hz):
        bad = r >= hz if open_end else r > hz * (1 + 1e-14)
        if np.any(bad):
            raise ValueError(f"radius beyond the model horizon {hz}")


def model_density(params: ModelParams, r):
    """h_{K,N}(r) = sin_{K/(N-1)}(r)^{N-1}."""
    _check_radius(params, r)
    s = np.maximum(sin_k(params.c, r), 0.0)
    out = s ** (params.N - 1)
    return float(out) if np.ndim(out) == 0 else out


def model_volume(params: ModelParams, r: float, cfg: SolverConfig = DEFAULT_CFG, method: str = "auto") -> float:
    """v_{K,N}(r) = int_0^r h_{K,N}. ``method`` is auto, exact (K=0) or quad."""
    _check_radius(params, r)
    r = float(r)
    if r == 0.0:
        return 0.0
    if method not in ("auto", "exact", "quad"):
        raise ValueError(f"unknown method {method!r}")
    if params.K == 0 and method != "quad":
        return r ** params.N / params.N
    if method == "exact":
        raise ValueError("exact antiderivative only available for K=0")
    val, _ = integrate.quad(lambda t: model_density(params, t), 0.0, r, epsabs=0.0,
                            epsrel=cfg.quad_tol, limit=200)
    return val


def model_mean_curvature(params: ModelParams, r):
    """H_{K,N}(r) = (N-1) sin'/sin."""
    _check_radius(params, r, open_end=True, open_start=True)
    r = np.asarray(r, dtype=float)
    c, n1 = params.c, params.N - 1
    if c > 0:
        q = math.sqrt(c)
        out = n1 * q * np.cos(q * r) / np.sin(q * r)
    elif c < 0:
        q = math.sqrt(-c)
        out = n1 * q / np.tanh(q * r)
    else:
        out = n1 / r
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# monotone Lipschitz approximation


def monotone_approximation(k: CurvatureProfile, n: int, x: float, resolution: int = 4097) -> float:
    """k_n(x) = inf_y (k(y) + n|x-y|) ∧ n.

    Sampled profiles are piecewise linear, so the infimum is attained at a
    grid node or at x and the search is exact. Closed-form profiles are
    searched on a fine grid and the best cell refined by bounded
    minimisation.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    a, b = k.domain
    if not a <= x <= b:
        raise ValueError("x outside the profile domain")
    if k.kind == "constant":
        return min(k.value, float(n))
    if k.kind == "sampled":
        ys = np.append(k.grid, x)
        vals = k.raw(ys) + n * np.abs(x - ys)
        return min(float(vals.min()), float(n))
    if not math.isfinite(b):
        raise ValueError("closed-form monotone approximation needs a bounded domain")
    ys = np.unique(np.append(np.linspace(a, b, resolution), x))
    vals = k.raw(ys) + n * np.abs(x - ys)
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, len(ys) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda y: k.raw(y) + n * abs(x - y), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return min(best, float(n))
