"""Case builders and executors for every experiment kind.

A case is a plain dict (picklable, JSON-serializable); executing it returns
a CaseResult. HypothesisError means "not applicable" and yields a skip.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from . import corpus
from .cd_density import (
    HypothesisError,
    SamplingConfig,
    check_comparison_1d,
    model_cd_density,
    verify_differential,
    verify_sigma_inequality,
)
from .eigen import check_cheng, lambda_model, lambda_variational
from .model_spaces import CurvatureProfile, ModelParams
from .partition import (
    DiscreteGeodesicSpace,
    cells,
    check_partition,
    generic_delta,
    path_graph,
    sphere_graph,
    tie_set,
)
from .radial_space import (
    RadialSpace,
    StarShapedTruncation,
    check_ball_chaining,
    check_bishop_gromov,
    check_doubling,
    check_f_alpha_monotone,
    myers_trend,
    polar_integral,
)

__all__ = ["KINDS", "CHECKS", "CaseResult", "ConfigError", "build_cases", "execute"]


class ConfigError(ValueError):
    pass


CHECKS = {
    "cd-verify": "Riccati differential inequality for CD densities (verdict vs corpus annotation)",
    "comparison-1d": "1-D mean curvature deficit vs integral curvature deficit",
    "bishop-gromov": "quantitative Bishop-Gromov volume ratio and its density form",
    "doubling": "deficit-corrected uniform doubling and the factor-2 ball form",
    "ball-chaining": "flat ball-chaining lower bound for volume growth",
    "f-alpha": "monotonicity of f_alpha built from the mean curvature deficit",
    "myers-trend": "excess support length over the model diameter as the deficit vanishes",
    "eigen-sweep": "shooting vs Rayleigh-quotient p-eigenvalues",
    "cheng": "eigenvalue comparison with the model ball",
    "partition": "perturbed-Voronoi star-shaped partition properties",
    "polar-identity": "polar disintegration of integrals over truncated balls",
}
KINDS = tuple(CHECKS)


@dataclass
class CaseResult:
    index: int
    label: str
    status: str  # pass | fail | skip
    worst_slack: float | None = None
    detail: str = ""
    rows: list = field(default_factory=list)  # kind-specific artifact rows
    record: dict | None = None


# ---------------------------------------------------------------------------
# helpers


def _grid(cfg: dict, *keys, required=True) -> list[dict]:
    grid = cfg.get("grid", {})
    lists = []
    for k in keys:
        if k not in grid:
            if required:
                raise ConfigError(f"grid.{k} is required for kind {cfg['kind']}")
            continue
        vals = grid[k]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"grid.{k} must be a non-empty list")
        lists.append([(k, v) for v in vals])
    return [dict(c) for c in itertools.product(*lists)]


def _check_params(N, p=None):
    if not N > 1:
        raise ConfigError(f"N={N} must exceed 1")
    if p is not None and not p > N / 2:
        raise ConfigError(f"p={p} must exceed N/2={N / 2}")


def _space_entries(cfg: dict) -> list[dict]:
    ref = cfg.get("corpus", "spaces")
    if ref == "spaces":
        entries = corpus.space_corpus()
    else:
        entries = json.loads(Path(ref).read_text(encoding="utf-8"))["spaces"]
    roles = cfg.get("params", {}).get("roles")
    names = cfg.get("params", {}).get("names")
    out = [e for e in entries if (roles is None or e.get("role") in roles) and (names is None or e["name"] in names)]
    for e in out:
        _check_params(e["density"]["N"], e.get("p"))
    if not out:
        raise ConfigError("corpus selection is empty")
    return out


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _label(d: dict) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in d.items())


def _status(report) -> str:
    return "pass" if report.passed else "fail"


# ---------------------------------------------------------------------------
# case builders


def _cases_cd_verify(cfg):
    ref = cfg.get("corpus", "densities")
    entries = corpus.density_corpus() if ref == "densities" else \
        json.loads(Path(ref).read_text(encoding="utf-8"))["densities"]
    for e in entries:
        if e.get("expected") not in ("pass", "fail"):
            raise ConfigError(f"density {e.get('name')} lacks an expected verdict")
    return [{"entry": e} for e in entries]


def _cases_comparison(cfg):
    cases = _grid(cfg, "Kp", "K", "p", "N")
    for c in cases:
        _check_params(c["N"], c["p"])
    return cases


def _cases_spaces(cfg, *keys):
    entries = _space_entries(cfg)
    extra = _grid(cfg, *keys) if keys else [{}]
    return [dict(entry=e, **x) for e in entries for x in extra]


def _cases_myers(cfg):
    cases = _grid(cfg, "K", "N", "p")
    deltas = cfg.get("params", {}).get("deltas")
    if not deltas:
        raise ConfigError("params.deltas is required")
    for c in cases:
        _check_params(c["N"], c["p"])
        if not c["K"] > 0:
            raise ConfigError("myers-trend needs K > 0")
        c["deltas"] = list(deltas)
    return cases


def _cases_eigen(cfg):
    cases = _grid(cfg, "K", "N", "p", "r")
    for c in cases:
        _check_params(c["N"])
        if not c["p"] > 1:
            raise ConfigError("p must exceed 1")
        if not c["r"] < ModelParams(c["K"], c["N"]).horizon:
            raise ConfigError(f"r={c['r']} beyond the horizon")
    return cases


def _cases_cheng(cfg):
    cases = _grid(cfg, "K", "N", "p", "p0", "r")
    deltas = cfg.get("params", {}).get("deltas")
    if not deltas:
        raise ConfigError("params.deltas is required")
    for c in cases:
        _check_params(c["N"], c["p0"])
        c["deltas"] = list(deltas)
    return cases


def _cases_partition(cfg):
    cases = _grid(cfg, "fixture", "delta_mode")
    for c in cases:
        if c["delta_mode"] not in ("generic", "tie"):
            raise ConfigError("delta_mode must be generic or tie")
        _fixture(c["fixture"])  # validates
    return cases


def _cases_polar(cfg):
    n = int(cfg.get("params", {}).get("cases", 30))
    if n < 1:
        raise ConfigError("params.cases must be positive")
    rng = np.random.default_rng(cfg.get("seed", 0))
    out = []
    for _ in range(n):
        a = float(rng.uniform(0.5, 3.0))
        R = float(rng.uniform(1.0, 3.0))
        r = float(rng.uniform(0.2, 1.0) * R)
        s = float(rng.uniform(0.0, 0.9) * r)
        E = float(rng.uniform(0.1, 1.0) * R)
        coef = [float(x) for x in rng.normal(size=3)]
        out.append({"a": a, "R": R, "theta": float(rng.uniform(0.5, 5.0)), "s": s, "r": r, "E": E, "coef": coef})
    return out


BUILDERS = {
    "cd-verify": _cases_cd_verify,
    "comparison-1d": _cases_comparison,
    "bishop-gromov": lambda cfg: _cases_spaces(cfg),
    "doubling": lambda cfg: _cases_spaces(cfg, "R"),
    "ball-chaining": lambda cfg: _cases_spaces(cfg, "R"),
    "f-alpha": lambda cfg: _cases_spaces(cfg, "alpha", "exit_frac"),
    "myers-trend": _cases_myers,
    "eigen-sweep": _cases_eigen,
    "cheng": _cases_cheng,
    "partition": _cases_partition,
    "polar-identity": _cases_polar,
}


def build_cases(cfg: dict) -> list[dict]:
    kind = cfg.get("kind")
    if kind not in BUILDERS:
        raise ConfigError(f"unknown or missing experiment kind {kind!r}")
    try:
        cases = BUILDERS[kind](cfg)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if not cases:
        raise ConfigError("no cases")
    return cases


# ---------------------------------------------------------------------------
# executors


def _run_cd_verify(case, cfg):
    e = case["entry"]
    tol = cfg.get("tol", 1e-6)
    h = corpus.build_density(e["density"])
    kappa = corpus.density_kappa(e)
    rep = verify_differential(h, kappa, tol)
    verdict = "pass" if rep.passed else "fail"
    detail = f"verdict={verdict} expected={e['expected']}"
    samples = int(cfg.get("params", {}).get("sigma_samples", 0))
    if samples and verdict == "pass":
        sig = verify_sigma_inequality(h, kappa, SamplingConfig(n=samples, seed=cfg.get("seed", 0)))
        detail += f" sigma_min_slack={sig.min_slack!r}"
    status = "pass" if verdict == e["expected"] else "fail"
    # signed agreement margin: >= 0 iff the verdict matches the annotation
    margin = rep.min_slack + tol if e["expected"] == "pass" else -(rep.min_slack + tol)
    return CaseResult(0, e["name"], status, margin, f"{detail} min_slack={rep.min_slack!r}")


def _run_comparison(case, cfg):
    Kp, K, p, N = case["Kp"], case["K"], case["p"], case["N"]
    R = cfg.get("params", {}).get("R")
    hz = ModelParams(K, N).horizon
    if R is None:
        R = hz if math.isfinite(hz) else 3.0
    R = min(R, ModelParams(Kp, N).horizon)
    h = model_cd_density(Kp, N, R)
    rep = check_comparison_1d(h, CurvatureProfile.constant(Kp), K, p, tol=cfg.get("tol", 1e-6))
    return CaseResult(0, _label(case), _status(rep), rep.min_slack, f"points={len(rep)}")


def _space(case) -> tuple[RadialSpace, dict]:
    e = case["entry"]
    return corpus.build_space(e), e


def _run_bg(case, cfg):
    s, e = _space(case)
    rep = check_bishop_gromov(s, e["K"], e["p"], tol=cfg.get("tol", 1e-6))
    return CaseResult(0, e["name"], _status(rep), rep.min_slack, f"role={e['role']} rows={len(rep)}")


def _run_doubling(case, cfg):
    s, e = _space(case)
    R = min(case["R"], s.R_max)
    rep = check_doubling(s, e["K"], e["p"], R, tol=cfg.get("tol", 1e-9))
    return CaseResult(0, f"{e['name']} R={_fmt(R)}", _status(rep), rep.min_slack, f"rows={len(rep)}")


def _run_chaining(case, cfg):
    s, e = _space(case)
    if e["K"] != 0:
        raise HypothesisError("ball chaining is stated for K = 0")
    R = min(case["R"], s.R_max)
    rep = check_ball_chaining(s, e["p"], R, tol=cfg.get("tol", 1e-9))
    status = _status(rep) if len(rep) else "skip"
    return CaseResult(0, f"{e['name']} R={_fmt(R)}", status, rep.min_slack if len(rep) else None,
                      f"rows={len(rep)}")


def _run_f_alpha(case, cfg):
    s, e = _space(case)
    frac = case["exit_frac"]
    T = None if frac >= 1 else StarShapedTruncation(frac * s.R_max)
    rep = check_f_alpha_monotone(s, e["K"], case["alpha"], T, tol=cfg.get("tol", 1e-6))
    return CaseResult(0, f"{e['name']} alpha={_fmt(case['alpha'])} exit_frac={_fmt(frac)}", _status(rep),
                      rep.min_slack, f"rows={len(rep)}")


def _run_myers(case, cfg):
    K, N, p = case["K"], case["N"], case["p"]
    fam = [(None, CurvatureProfile.constant(K - d)) for d in case["deltas"]]
    tr = myers_trend(fam, K, p, N)
    params = cfg.get("params", {})
    limit_tol = params.get("limit_tol", 1e-4)
    final_tol = params.get("final_excess_tol", math.inf)
    ok = tr.decreasing and abs(tr.limit) < limit_tol and tr.excess[-1] < final_tol
    rec = dict(tr.to_dict(), deltas=case["deltas"])
    return CaseResult(0, _label({"K": K, "N": N, "p": p}), "pass" if ok else "fail", -abs(tr.limit),
                      f"exponent={tr.exponent!r} limit={tr.limit!r} final_excess={tr.excess[-1]!r}", record=rec)


def _run_eigen(case, cfg):
    K, N, p, r = case["K"], case["N"], case["p"], case["r"]
    params = cfg.get("params", {})
    shoot = lambda_model(ModelParams(K, N), r, p)
    hz = ModelParams(K, N).horizon
    w = model_cd_density(K, N, r if not math.isfinite(hz) else None, n=2001)
    var = lambda_variational(w, r, p, cells=int(params.get("cells", 400)), starts=int(params.get("starts", 4)),
                             seed=cfg.get("seed", 0))
    rel = abs(var.lam - shoot.lam) / shoot.lam
    tol = cfg.get("tol", 1e-3)
    row = [K, N, p, r, shoot.lam, var.lam, shoot.residual, rel]
    return CaseResult(0, _label(case), "pass" if rel <= tol else "fail", tol - rel, f"rel_diff={rel!r}", rows=[row])


def _run_cheng(case, cfg):
    K, N, p, p0, r = (case[k] for k in ("K", "N", "p", "p0", "r"))
    recs = []
    for d in case["deltas"]:
        h = model_cd_density(K - d, N, None if K - d > 0 else 2 * r, n=4001)
        s = RadialSpace(h, 1.0, CurvatureProfile.constant(K - d))
        recs.append(dict(check_cheng(s, K, p, p0, r).to_dict(), delta=d))
    zero = [x for x in recs if x["delta"] == 0]
    pos = [x for x in recs if x["delta"] > 0]
    tol0 = cfg.get("tol", 1e-5)
    ok = all(x["difference"] <= tol0 for x in zero)
    diffs = [x["difference"] for x in sorted(pos, key=lambda x: -x["delta"])]
    ok = ok and all(v > 0 for v in diffs) and all(b < a for a, b in zip(diffs, diffs[1:]))
    worst = min([tol0 - x["difference"] for x in zero], default=None)
    return CaseResult(0, _label({k: case[k] for k in ("K", "N", "p", "p0", "r")}), "pass" if ok else "fail",
                      worst, f"differences={diffs!r}", rows=recs)


def _fixture(name: str) -> DiscreteGeodesicSpace:
    kind, _, arg = str(name).partition(":")
    if kind == "path":
        return path_graph(int(arg))
    if kind == "sphere":
        return sphere_graph(int(arg))
    if kind == "file":
        return DiscreteGeodesicSpace.from_json(json.loads(Path(arg).read_text(encoding="utf-8")))
    raise ConfigError(f"unknown fixture {name!r}")


def _run_partition(case, cfg):
    space = _fixture(case["fixture"])
    a = 0
    b = int(np.argmax(space.dist[a]))
    centers = [a, b]
    sep = float(space.dist[a, b]) / 4
    params = cfg.get("params", {})
    if case["delta_mode"] == "generic":
        lo, hi = params.get("window", [0.05, 0.95])
        delta = generic_delta(space, centers, (lo * 2 * sep, hi * 2 * sep), float(params.get("margin", 1e-3)))
        fam = cells(space, centers, delta)
        rep = check_partition(space, fam, separation=sep)
        ok = rep.passed and not fam.uncovered
    else:
        delta = 0.0
        fam = cells(space, centers, delta)
        rep = check_partition(space, fam, separation=None)
        predicted = tie_set(space, centers, delta)
        ok = fam.uncovered == predicted and rep.items["disjoint"]["passed"] and rep.items["star_shaped"]["passed"]
    rec = {"fixture": case["fixture"], "delta_mode": case["delta_mode"], "family": fam.to_dict(space),
           "report": rep.to_dict()}
    return CaseResult(0, _label(case), "pass" if ok else "fail", None,
                      f"delta={delta!r} uncovered={len(fam.uncovered)}", record=rec)


def _run_polar(case, cfg):
    a, R, th = case["a"], case["R"], case["theta"]
    c0, c1, c2 = case["coef"]
    h = corpus.build_density({"kind": "power", "a": a, "N": a + 1, "R": R})
    space = RadialSpace(h, th, CurvatureProfile.constant(0.0))

    def phi(t):
        return c0 + c1 * t + c2 * t * t

    val = polar_integral(space, phi, case["s"], case["r"], StarShapedTruncation(case["E"]))
    top = min(case["r"], case["E"])
    if top <= case["s"]:
        ref = 0.0
    else:
        # composite Simpson on the raw integrand, independent of the density object
        t = np.linspace(case["s"], top, 20001)
        ref = th * integrate.simpson(phi(t) * t ** a, x=t)
    err = abs(val - ref) / max(1.0, abs(ref))
    tol = cfg.get("tol", 1e-9)
    return CaseResult(0, _label({k: case[k] for k in ("a", "s", "r", "E")}), "pass" if err <= tol else "fail",
                      tol - err, f"value={val!r} reference={ref!r}")


EXECUTORS = {
    "cd-verify": _run_cd_verify,
    "comparison-1d": _run_comparison,
    "bishop-gromov": _run_bg,
    "doubling": _run_doubling,
    "ball-chaining": _run_chaining,
    "f-alpha": _run_f_alpha,
    "myers-trend": _run_myers,
    "eigen-sweep": _run_eigen,
    "cheng": _run_cheng,
    "partition": _run_partition,
    "polar-identity": _run_polar,
}


def execute(kind: str, index: int, case: dict, cfg: dict) -> CaseResult:
    try:
        res = EXECUTORS[kind](case, cfg)
    except HypothesisError as exc:
        label = case["entry"]["name"] if "entry" in case else _label(case)
        res = CaseResult(0, label, "skip", None, f"hypothesis not met: {exc}")
    res.index = index
    if res.worst_slack is not None:
        res.worst_slack = float(res.worst_slack)
    return res
