"""Dirichlet p-eigenvalues of weighted intervals (0, r) with the Neumann-type
pole condition, by shooting and by Rayleigh-quotient minimization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .cd_density import CdDensity, HypothesisError, integral_deficit, model_cd_density
from .model_spaces import ModelParams, SolverError
from .radial_space import RadialSpace

__all__ = [
    "EigenConfig",
    "EigenResult",
    "ChengRecord",
    "lambda_shooting",
    "lambda_variational",
    "lambda_model",
    "check_cheng",
    "weak_residual",
]


@dataclass(frozen=True)
class EigenConfig:
    pole_offset: float = 1e-6  # relative to r
    tol: float = 1e-12  # relative tolerance on lambda
    rtol: float = 1e-11
    atol: float = 1e-13
    samples: int = 2001
    monotone_tol: float = 1e-10


DEFAULT_EIGEN = EigenConfig()


@dataclass(frozen=True, eq=False)
class EigenResult:
    lam: float
    t: np.ndarray
    phi: np.ndarray
    flux: np.ndarray
    method: str
    residual: float
    p: float
    r: float

    @property
    def flux_at_pole(self) -> float:
        return float(self.flux[0])


def _weight_pair(weight) -> tuple[Callable, Callable, float]:
    """(w, (log w)', domain end) from a CdDensity or a (w, dlogw) pair."""
    if isinstance(weight, CdDensity):
        return weight, weight.slope, weight.domain[1]
    w, dlogw = weight
    return w, dlogw, math.inf


def _signed_pow(x, e):
    return np.sign(x) * np.abs(x) ** e


def _shoot(dlogw: Callable, lam: float, p: float, t0: float, r: float, cfg: EigenConfig, dense: bool = False):
    inv = 1.0 / (p - 1)

    def rhs(t, y):
        phi, F = y
        return [_signed_pow(F, inv), -F * dlogw(t) - lam * _signed_pow(phi, p - 1)]

    return integrate.solve_ivp(rhs, (t0, r), [1.0, 0.0], method="DOP853", rtol=cfg.rtol, atol=cfg.atol,
                               dense_output=dense)


def _has_zero(sol) -> bool:
    return bool(np.any(sol.y[0] <= 0.0))


def lambda_shooting(weight, r: float, p: float, cfg: EigenConfig = DEFAULT_EIGEN) -> EigenResult:
    """First Dirichlet p-eigenvalue of (0, r) with weight w, by shooting in lambda."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    w, dlogw, end = _weight_pair(weight)
    if not 0 < r <= end * (1 + 1e-12):
        raise ValueError("r outside the weight domain")
    t0 = cfg.pole_offset * r

    def zero_before_r(lam):
        sol = _shoot(dlogw, lam, p, t0, r, cfg)
        if sol.status < 0:
            raise SolverError(f"integration failed at lambda={lam}: {sol.message}", sol.t[-1])
        return _has_zero(sol)

    # constant-weight scale, widened geometrically
    lo = hi = (p - 1) * (math.pi / r) ** p
    for _ in range(200):
        if not zero_before_r(lo):
            break
        lo /= 2
    else:
        raise SolverError("could not bracket the eigenvalue from below", t0)
    for _ in range(200):
        if zero_before_r(hi):
            break
        hi *= 2
    else:
        raise SolverError("could not bracket the eigenvalue from above", r)
    while hi / lo - 1 > 1e-3:
        mid = 0.5 * (lo + hi)
        if zero_before_r(mid):
            hi = mid
        else:
            lo = mid

    def end_value(lam):
        return _shoot(dlogw, lam, p, t0, r, cfg).y[0, -1]

    lam = optimize.brentq(end_value, lo, hi, xtol=1e-300, rtol=max(cfg.tol, 4e-16), maxiter=200)
    # settle on the side of the root where phi stays non-negative up to r
    step = 4e-16 * lam
    while end_value(lam) < 0 and lam - step > lo:
        lam -= step
        step *= 2
    sol = _shoot(dlogw, lam, p, t0, r, cfg, dense=True)
    ts = np.linspace(t0, r, cfg.samples)
    y = sol.sol(ts)
    t = np.concatenate([[0.0], ts])
    phi = np.concatenate([[1.0], y[0]])
    flux = np.concatenate([[0.0], y[1]])
    if np.any(np.diff(phi) > cfg.monotone_tol):
        raise SolverError("non-monotone eigenfunction (integration blow-up)", float(ts[np.argmax(np.diff(phi[1:]))]))
    return EigenResult(float(lam), t, phi, flux, "shooting", float(y[0, -1]), p, r)


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def lambda_variational(weight, r: float, p: float, cells: int = 400, starts: int = 4, seed: int = 0,
                       mu: float = 1e-12, maxiter: int = 20000) -> EigenResult:
    """Minimal Rayleigh quotient over continuous piecewise-linear phi with phi(r) = 0.

    L-BFGS-B from several starts (two smooth profiles plus random ones);
    |x|^{p-2}x is smoothed with mu only inside the gradient.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    w, _, end = _weight_pair(weight)
    if not 0 < r <= end * (1 + 1e-12):
        raise ValueError("r outside the weight domain")
    nodes = np.linspace(0.0, r, cells + 1)
    dt = np.diff(nodes)
    gx = 0.5 * (_GAUSS_X + 1)
    gw = 0.5 * _GAUSS_W
    tq = nodes[:-1, None] + dt[:, None] * gx[None, :]
    wq = np.asarray(w(tq.ravel()), dtype=float).reshape(tq.shape) * gw[None, :] * dt[:, None]
    wcell = wq.sum(axis=1)
    # phi at quadrature points = (1-x) phi_i + x phi_{i+1}
    a_left = 1 - gx
    a_right = gx

    # unknowns are the increments phi_i - phi_{i+1}; the stiffness term is then diagonal
    def full(u):
        return np.concatenate([np.cumsum(u[::-1])[::-1], [0.0]])

    def quotient(u):
        phi = full(u)
        d = np.diff(phi) / dt
        num = np.sum(np.abs(d) ** p * wcell)
        pq = phi[:-1, None] * a_left + phi[1:, None] * a_right
        den = np.sum(np.abs(pq) ** p * wq)
        return num, den, d, pq

    def fun(u):
        num, den, d, pq = quotient(u)
        sd = (d * d + mu * mu) ** ((p - 2) / 2) * d
        gnum = np.zeros(cells + 1)
        c = p * sd * wcell / dt
        gnum[1:] += c
        gnum[:-1] -= c
        sp = (pq * pq + mu * mu) ** ((p - 2) / 2) * pq * wq * p
        gden = np.zeros(cells + 1)
        gden[:-1] += (sp * a_left).sum(axis=1)
        gden[1:] += (sp * a_right).sum(axis=1)
        q = num / den
        g = (gnum - q * gden) / den
        return q, np.cumsum(g[:-1])

    rng = np.random.default_rng(seed)
    x = nodes[:-1] / r
    guesses = [-np.diff(np.append(np.cos(0.5 * math.pi * x), 0.0)), -np.diff(np.append(1 - x ** 2, 0.0))]
    for _ in range(max(0, starts - 2)):
        guesses.append(rng.random(cells) / cells)
    best = None
    for g0 in guesses:
        res = optimize.minimize(fun, g0, jac=True, method="L-BFGS-B",
                                options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 30})
        top = full(res.x)[0]
        u = res.x / top if top != 0 else res.x
        val = quotient(u)
        q = val[0] / val[1]
        if best is None or q < best[0]:
            best = (q, u, res)
    q, u, res = best
    phi = full(u)
    phi[0] = 1.0
    d = np.diff(phi) / dt
    flux = np.concatenate([_signed_pow(d, p - 1), [_signed_pow(d[-1], p - 1)]])
    residual = float(np.linalg.norm(res.jac, np.inf)) if res.jac is not None else math.nan
    return EigenResult(float(q), nodes, phi, flux, "variational", residual, p, r)


@lru_cache(maxsize=1024)
def _model_cached(K: float, N: float, p: float, r: float) -> EigenResult:
    params = ModelParams(K, N)
    if not r < params.horizon:
        raise ValueError("r must lie below the model horizon")
    return lambda_shooting(model_cd_density(K, N, r, n=2001), r, p)


def lambda_model(params: ModelParams, r: float, p: float) -> EigenResult:
    """lambda_p(K, N, r), cached per (K, N, p, r)."""
    return _model_cached(float(params.K), float(params.N), float(p), float(r))


def weak_residual(res: EigenResult, weight, g: Callable, dg: Callable) -> float:
    """int |phi'|^{p-2}phi' g' w - lambda int |phi|^{p-2}phi g w for a test g."""
    w, _, _ = _weight_pair(weight)
    t = res.t[1:]
    ww = np.asarray(w(t), dtype=float)
    phi = res.phi[1:]
    a = integrate.simpson(res.flux[1:] * dg(t) * ww, x=t)
    b = integrate.simpson(_signed_pow(phi, res.p - 1) * g(t) * ww, x=t)
    return float(a - res.lam * b)


@dataclass(frozen=True)
class ChengRecord:
    K: float
    N: float
    p: float
    p0: float
    r: float
    lambda_space: float
    lambda_model: float
    p_bar: float
    averaged_deficit: float
    difference: float
    deficit_root: float
    ratio: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_cheng(space: RadialSpace, K: float, p: float, p0: float, r: float) -> ChengRecord:
    """Eigenvalue of B_r (radial problem with weight theta h) against the model."""
    N = space.N
    if not p0 > N / 2:
        raise HypothesisError("p0 must exceed N/2")
    params = ModelParams(K, N)
    if not (0 < r < params.horizon and r <= space.R_max * (1 + 1e-12)):
        raise ValueError("r must lie in (0, min(horizon, R_max))")
    if not space.h.vanishes_at_a:
        raise HypothesisError("ray density does not have vanishing average at the pole")
    lam_b = lambda_shooting(space.h, r, p).lam
    lam_k = lambda_model(params, r, p).lam
    p_bar = max(p / 2, p0)
    m = integrate.quad(space.h, 0.0, r, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    dfc = integral_deficit(space.h, space.kappa, K, p_bar, r) / m
    root = dfc ** (1 / (2 * p_bar - 1))
    diff = lam_b - lam_k
    ratio = diff / root if root > 0 else math.nan
    return ChengRecord(K, N, p, p0, r, lam_b, lam_k, p_bar, dfc, diff, root, ratio)
