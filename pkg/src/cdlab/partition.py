"""Perturbed-Voronoi cells on weighted graphs with all shortest paths kept.

Cells are T_i = (intersection over j > i of U_ij^delta) and
(intersection over j < i of U_ij^-delta), with
U_ij^delta = {x : d(x, x_i) - d(x, x_j) < delta}.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TIE_TOL",
    "DiscreteGeodesicSpace",
    "CellFamily",
    "PartitionReport",
    "GenericityError",
    "path_graph",
    "sphere_graph",
    "separated_net",
    "cells",
    "tie_values",
    "tie_set",
    "generic_delta",
    "star_shaped_in",
    "check_partition",
]

TIE_TOL = 1e-9


class GenericityError(ValueError):
    pass


def _dijkstra_all(n: int, adj: list, src: int, tol: float):
    dist = [math.inf] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    dist[src] = 0.0
    heap = [(0.0, src)]
    done = [False] * n
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w in adj[u]:
            nd = d + w
            scale = tol * max(1.0, nd)
            if nd < dist[v] - scale:
                dist[v] = nd
                preds[v] = [u]
                heapq.heappush(heap, (nd, v))
            elif abs(nd - dist[v]) <= scale and u not in preds[v]:
                preds[v].append(u)
    return dist, preds


@dataclass(frozen=True, eq=False)
class DiscreteGeodesicSpace:
    """Weighted graph with shortest-path metric and every geodesic predecessor."""

    ids: tuple
    weights: np.ndarray
    edges: tuple  # (u, v, length) as indices
    dist: np.ndarray = field(init=False)
    preds: tuple = field(init=False)

    def __post_init__(self):
        n = len(self.ids)
        if n == 0:
            raise ValueError("empty space")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0):
            raise ValueError("node weights must be positive")
        adj = [[] for _ in range(n)]
        for u, v, length in self.edges:
            if not length > 0:
                raise ValueError("edge lengths must be positive")
            adj[u].append((v, float(length)))
            adj[v].append((u, float(length)))
        D = np.empty((n, n))
        P = []
        for s in range(n):
            d, pr = _dijkstra_all(n, adj, s, 1e-12)
            D[s] = d
            P.append(tuple(tuple(sorted(x)) for x in pr))
        if not np.all(np.isfinite(D)):
            raise ValueError("graph is disconnected")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dist", D)
        object.__setattr__(self, "preds", tuple(P))

    @classmethod
    def from_json(cls, doc: dict) -> DiscreteGeodesicSpace:
        ids = tuple(nd["id"] for nd in doc["nodes"])
        index = {k: i for i, k in enumerate(ids)}
        if len(index) != len(ids):
            raise ValueError("duplicate node ids")
        weights = np.array([float(nd.get("weight", 1.0)) for nd in doc["nodes"]])
        edges = tuple((index[e["u"]], index[e["v"]], float(e["length"])) for e in doc["edges"])
        return cls(ids, weights, edges)

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": k, "weight": float(w)} for k, w in zip(self.ids, self.weights)],
            "edges": [{"u": self.ids[u], "v": self.ids[v], "length": float(l)} for u, v, l in self.edges],
        }

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def metric_violation(self) -> float:
        """Largest violation of symmetry, zero diagonal and triangle inequality."""
        D = self.dist
        sym = float(np.max(np.abs(D - D.T)))
        diag = float(np.max(np.abs(np.diag(D))))
        tri = 0.0
        for k in range(self.n):
            tri = max(tri, float(np.max(D - (D[:, k, None] + D[None, k, :]))))
        return max(sym, diag, tri)

    def shortest_paths(self, src: int, dst: int) -> Iterable[tuple]:
        """All recorded shortest paths src -> dst."""
        P = self.preds[src]

        def walk(v):
            if v == src:
                yield (src,)
                return
            for u in P[v]:
                for path in walk(u):
                    yield path + (v,)

        return walk(dst)


def path_graph(L: int, length: float = 1.0) -> DiscreteGeodesicSpace:
    return DiscreteGeodesicSpace(tuple(range(L + 1)), np.ones(L + 1),
                                 tuple((i, i + 1, length) for i in range(L)))


def _icosahedron():
    g = (1 + math.sqrt(5)) / 2
    v = [(-1, g, 0), (1, g, 0), (-1, -g, 0), (1, -g, 0), (0, -1, g), (0, 1, g), (0, -1, -g), (0, 1, -g),
         (g, 0, -1), (g, 0, 1), (-g, 0, -1), (-g, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
         (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
         (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    v = np.array(v, dtype=float)
    return v / np.linalg.norm(v, axis=1)[:, None], f


def sphere_graph(resolution: int) -> DiscreteGeodesicSpace:
    """Geodesic polyhedron of frequency ``resolution`` on the unit sphere.

    10 nu^2 + 2 nodes and 30 nu^2 edges; edges carry great-circle arc
    lengths and nodes unit weight.
    """
    nu = int(resolution)
    if nu < 1:
        raise ValueError("resolution must be >= 1")
    verts, faces = _icosahedron()
    points: list[np.ndarray] = []
    keys: dict = {}

    def node(x):
        x = x / np.linalg.norm(x)
        k = tuple(np.round(x, 9) + 0.0)
        if k not in keys:
            keys[k] = len(points)
            points.append(x)
        return keys[k]

    edges = set()
    for a, b, c in faces:
        A, B, C = verts[a], verts[b], verts[c]
        idx = {}
        for i in range(nu + 1):
            for j in range(nu + 1 - i):
                k = nu - i - j
                idx[i, j] = node((k * A + i * B + j * C) / nu)
        for i in range(nu + 1):
            for j in range(nu + 1 - i):
                u = idx[i, j]
                for di, dj in ((1, 0), (0, 1), (-1, 1)):
                    nb = (i + di, j + dj)
                    if nb in idx:
                        edges.add((min(u, idx[nb]), max(u, idx[nb])))
    pts = np.array(points)
    elist = tuple((u, v, float(np.arccos(np.clip(pts[u] @ pts[v], -1.0, 1.0)))) for u, v in sorted(edges))
    return DiscreteGeodesicSpace(tuple(range(len(pts))), np.ones(len(pts)), elist)


def separated_net(space: DiscreteGeodesicSpace, s: float) -> list[int]:
    """Greedy maximal s-separated set, scanning nodes in index order."""
    if not s > 0:
        raise ValueError("s must be positive")
    centers: list[int] = []
    D = space.dist
    for i in range(space.n):
        if all(D[i, c] >= s for c in centers):
            centers.append(i)
    return centers


@dataclass(frozen=True)
class CellFamily:
    centers: tuple
    delta: float
    cells: tuple  # frozensets of node indices, one per center
    uncovered: frozenset

    def to_dict(self, space: DiscreteGeodesicSpace | None = None) -> dict:
        name = (lambda i: i) if space is None else (lambda i: space.ids[i])
        return {
            "centers": [name(c) for c in self.centers],
            "delta": self.delta,
            "cells": [sorted(name(i) for i in c) for c in self.cells],
            "uncovered": sorted(name(i) for i in self.uncovered),
        }


def _U(space: DiscreteGeodesicSpace, ci: int, cj: int, delta: float) -> np.ndarray:
    diff = space.dist[:, ci] - space.dist[:, cj]
    return diff < delta - TIE_TOL


def cells(space: DiscreteGeodesicSpace, centers: Sequence[int], delta: float) -> CellFamily:
    centers = tuple(int(c) for c in centers)
    if len(set(centers)) != len(centers):
        raise ValueError("centers must be distinct")
    out = []
    for i, ci in enumerate(centers):
        mask = np.ones(space.n, dtype=bool)
        for j, cj in enumerate(centers):
            if j > i:
                mask &= _U(space, ci, cj, delta)
            elif j < i:
                mask &= _U(space, ci, cj, -delta)
        out.append(frozenset(np.flatnonzero(mask).tolist()))
    covered = set().union(*out) if out else set()
    return CellFamily(centers, float(delta), tuple(out), frozenset(set(range(space.n)) - covered))


def tie_values(space: DiscreteGeodesicSpace, centers: Sequence[int]) -> np.ndarray:
    """Sorted distinct values d(x, x_i) - d(x, x_j) over nodes and ordered pairs."""
    vals = [space.dist[:, a] - space.dist[:, b] for a, b in itertools.permutations(centers, 2)]
    if not vals:
        return np.empty(0)
    return np.unique(np.round(np.concatenate(vals), 12))


def tie_set(space: DiscreteGeodesicSpace, centers: Sequence[int], delta: float) -> frozenset:
    """Nodes x with |d(x,x_i) - d(x,x_j)| = delta for some pair (within TIE_TOL)."""
    hit = set()
    for a, b in itertools.combinations(centers, 2):
        diff = np.abs(space.dist[:, a] - space.dist[:, b])
        hit.update(np.flatnonzero(np.abs(diff - abs(delta)) <= TIE_TOL).tolist())
    return frozenset(hit)


def generic_delta(space: DiscreteGeodesicSpace, centers: Sequence[int], window: tuple[float, float],
                  margin: float) -> float:
    """A delta in the window farther than ``margin`` from every tie value.

    Candidates are the window ends and the midpoints of consecutive tie
    values inside it; the one farthest from the tie set wins (smallest on
    equal distance).
    """
    lo, hi = map(float, window)
    if not lo < hi:
        raise ValueError("degenerate window")
    ties = tie_values(space, centers)
    if ties.size == 0:
        return 0.5 * (lo + hi)
    inside = ties[(ties > lo) & (ties < hi)]
    bounds = np.concatenate([[lo], inside, [hi]])
    cands = np.unique(np.concatenate([[lo, hi], 0.5 * (bounds[:-1] + bounds[1:])]))
    gap = np.array([np.min(np.abs(ties - c)) for c in cands])
    best = int(np.argmax(gap))
    if not gap[best] > margin:
        near = ties[np.argsort(np.abs(ties - cands[best]))[:5]]
        raise GenericityError(f"no gap of width {2 * margin} in [{lo}, {hi}]; densest ties near "
                              f"{np.sort(near).tolist()}")
    return float(cands[best])


def star_shaped_in(space: DiscreteGeodesicSpace, center: int, nodes: Iterable[int]) -> frozenset:
    """Nodes of the set reachable from center by a recorded shortest path inside it.

    Returns the set of nodes that fail (empty means star-shaped).
    """
    S = set(nodes)
    if not S:
        return frozenset()
    if center not in S:
        return frozenset(S)
    order = sorted(S, key=lambda v: space.dist[center, v])
    good = {center}
    P = space.preds[center]
    for v in order:
        if v != center and any(u in good for u in P[v]):
            good.add(v)
    return frozenset(S - good)


@dataclass(frozen=True)
class PartitionReport:
    items: dict
    passed: bool

    def to_dict(self) -> dict:
        return {"passed": self.passed, "items": self.items}


def check_partition(space: DiscreteGeodesicSpace, family: CellFamily, uncovered_bound: float = 0.02,
                    separation: float | None = None) -> PartitionReport:
    """Disjointness, coverage (with the tie-set inclusion), star-shapedness
    of every cell and, given the separation scale s', the inclusion
    B_{2s'-delta}(x_i) in T_i when centers are 4s'-separated."""
    if len(family.cells) != len(family.centers):
        raise ValueError("malformed family")
    items = {}
    overlap = [(i, j) for i, j in itertools.combinations(range(len(family.cells)), 2)
               if family.cells[i] & family.cells[j]]
    items["disjoint"] = {"passed": not overlap, "overlapping_pairs": overlap}
    unc = sorted(family.uncovered)
    frac = float(space.weights[unc].sum() / space.total_weight) if unc else 0.0
    ties = tie_set(space, family.centers, family.delta)
    outside = sorted(set(unc) - ties)
    items["coverage"] = {"passed": frac <= uncovered_bound and not outside, "uncovered": [space.ids[i] for i in unc],
                         "uncovered_fraction": frac, "bound": uncovered_bound,
                         "not_in_tie_set": [space.ids[i] for i in outside]}
    bad = {}
    for c, cell in zip(family.centers, family.cells):
        fail = star_shaped_in(space, c, cell)
        if fail:
            bad[str(space.ids[c])] = sorted(space.ids[i] for i in fail)
    items["star_shaped"] = {"passed": not bad, "failures": bad}
    if separation is not None:
        s = float(separation)
        D = space.dist
        sep_ok = all(D[a, b] >= 4 * s - TIE_TOL for a, b in itertools.combinations(family.centers, 2))
        delta_ok = 0 < family.delta < 2 * s
        missing = {}
        if sep_ok and delta_ok:
            for c, cell in zip(family.centers, family.cells):
                ball = set(np.flatnonzero(D[c] < 2 * s - family.delta).tolist())
                if ball - cell:
                    missing[str(space.ids[c])] = sorted(space.ids[i] for i in ball - cell)
        items["ball_inclusion"] = {"passed": sep_ok and delta_ok and not missing, "applicable": sep_ok and delta_ok,
                                   "separation": s, "missing": missing}
    return PartitionReport(items, all(v["passed"] for v in items.values()))
