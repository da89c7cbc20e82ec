"""Bundled density and space corpora, built from JSON references through a
small generator registry."""
from __future__ import annotations

import json
from importlib import resources
from typing import Callable

import numpy as np

from .cd_density import DEFAULT_NODES, CdDensity, mollify, model_cd_density, synthesize_extremal
from .model_spaces import CurvatureProfile, ModelParams, model_mean_curvature, sin_k
from .radial_space import RadialSpace

__all__ = [
    "DENSITY_KINDS",
    "KAPPA_KINDS",
    "build_kappa",
    "build_density",
    "build_space",
    "density_kappa",
    "load_bundled",
    "density_corpus",
    "space_corpus",
]


def _kappa_constant(ref):
    return CurvatureProfile.constant(float(ref["value"]))


def _kappa_linear(ref):
    k0, k1, L = float(ref["k0"]), float(ref["k1"]), float(ref["length"])
    return CurvatureProfile.closed_form(lambda t: k0 + k1 * np.asarray(t), (0.0, L),
                                        lower_bound=min(k0, k0 + k1 * L), upper_bound=max(k0, k0 + k1 * L),
                                        spec=dict(ref))


def _kappa_sampled(ref):
    return CurvatureProfile.sampled(np.asarray(ref["grid"], float), np.asarray(ref["values"], float))


KAPPA_KINDS: dict[str, Callable] = {
    "constant": _kappa_constant,
    "linear": _kappa_linear,
    "sampled": _kappa_sampled,
}


def build_kappa(ref: dict) -> CurvatureProfile:
    try:
        return KAPPA_KINDS[ref["kind"]](ref)
    except KeyError as exc:
        raise ValueError(f"unknown curvature reference {ref!r}") from exc


def _model(ref, n):
    K, N = float(ref["K"]), float(ref["N"])
    return model_cd_density(K, N, ref.get("R"), n=n)


def _power(ref, n):
    a, N, R = float(ref["a"]), float(ref["N"]), float(ref["R"])
    return CdDensity.from_function(lambda t: np.asarray(t, float) ** a, 0.0, R, N, n,
                                   slope=lambda t: a / np.asarray(t, float), name=f"t^{a}")


def _exp(ref, n):
    c, N = float(ref["c"]), float(ref["N"])
    a, b = float(ref.get("a", 0.0)), float(ref["b"])
    return CdDensity.from_function(lambda t: np.exp(c * np.asarray(t, float)), a, b, N, n,
                                   slope=lambda t: c + 0 * np.asarray(t, float), name=f"exp({c}t)")


def _cosine(ref, n):
    """h_{K,N} shifted by the half-horizon: cos-type density on [0, frac * half]."""
    K, N = float(ref["K"]), float(ref["N"])
    params = ModelParams(K, N)
    half = params.half_horizon
    L = float(ref.get("frac", 0.9)) * half
    c = params.c
    return CdDensity.from_function(lambda t: sin_k(c, np.asarray(t, float) + half) ** (N - 1), 0.0, L, N, n,
                                   slope=lambda t: model_mean_curvature(params, np.asarray(t, float) + half),
                                   name=f"cosine(K={K},N={N})")


def _wiggle(ref, n):
    amp, freq, N, R = (float(ref[k]) for k in ("amp", "freq", "N", "R"))

    def f(t):
        t = np.asarray(t, float)
        return t ** (N - 1) * (1 + amp * np.sin(freq * t))

    return CdDensity.from_function(f, 0.0, R, N, n, name="wiggle")


def _extremal(ref, n):
    kappa = build_kappa(ref["kappa"])
    return synthesize_extremal(kappa, float(ref["N"]), n=n, length=ref.get("length"))


def _mollified(ref, n):
    base = build_density(ref["base"], n)
    h, _ = mollify(base, build_kappa(ref["base_kappa"]), float(ref["eps"]))
    return h


def _sampled(ref, n):
    """Raw record {grid, values, N, flags}; n is ignored."""
    flags = ref.get("flags", {})
    return CdDensity(np.asarray(ref["grid"], float), np.asarray(ref["values"], float), float(ref["N"]),
                     name=ref.get("name", "sampled"), vanishes_at_a=flags.get("vanishes_at_a"))


DENSITY_KINDS: dict[str, Callable] = {
    "sampled": _sampled,
    "model": _model,
    "power": _power,
    "exp": _exp,
    "cosine": _cosine,
    "wiggle": _wiggle,
    "extremal": _extremal,
    "mollified": _mollified,
}


def build_density(ref: dict, n: int | None = None) -> CdDensity:
    n = int(ref.get("nodes", DEFAULT_NODES)) if n is None else n
    try:
        gen = DENSITY_KINDS[ref["kind"]]
    except KeyError as exc:
        raise ValueError(f"unknown density reference {ref!r}") from exc
    return gen(ref, n)


def _mollified_kappa(ref: dict) -> CurvatureProfile:
    base = build_density(ref["base"])
    _, kappa = mollify(base, build_kappa(ref["base_kappa"]), float(ref["eps"]))
    return kappa


def density_kappa(entry: dict) -> CurvatureProfile:
    """The curvature a corpus density is checked against ("mollified" uses kappa_eps)."""
    ref = entry["kappa"]
    if ref.get("kind") == "mollified":
        return _mollified_kappa(entry["density"])
    return build_kappa(ref)


def build_space(entry: dict, n: int | None = None) -> RadialSpace:
    """{name, Theta, R_max, density, kappa} -> RadialSpace (R_max caps the ray)."""
    dref = dict(entry["density"])
    if "R_max" in entry and dref["kind"] == "model":
        dref["R"] = float(entry["R_max"])
    h = build_density(dref, n)
    return RadialSpace(h, float(entry["Theta"]), build_kappa(entry["kappa"]), entry.get("name", ""))


def load_bundled(name: str) -> dict:
    with resources.files("cdlab.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def density_corpus() -> list[dict]:
    return load_bundled("densities.json")["densities"]


def space_corpus() -> list[dict]:
    return load_bundled("spaces.json")["spaces"]
