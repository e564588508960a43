"""Reverse shortest paths in unit-disk graphs.

``G_delta(P)`` joins two points when they are at distance at most
``delta``.  Given ``s``, ``t`` and a budget ``lambda``, find the least
``delta`` whose graph has an ``s``-``t`` path within budget: a hop count
when unweighted, a Euclidean length when weighted.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import NoFeasibleValue, PointSet, RunStats, as_point_set, log2g, sq_dist_arrays
from .framework import FrameworkConfig, optimize_randomized


@dataclass(frozen=True)
class RspInstance:
    points: PointSet
    s: int
    t: int
    lam: float
    weighted: bool = False

    def __init__(self, points, s: int, t: int, lam: float, weighted: bool = False):
        P = as_point_set(points)
        n = len(P)
        if not (0 <= s < n and 0 <= t < n):
            raise ValueError(f"source/target ids must lie in 0..{n - 1}")
        if s == t:
            raise ValueError("source and target must differ")
        lam = float(lam)
        if not lam >= 0:
            raise ValueError("the path budget must be nonnegative")
        if not weighted and lam != math.floor(lam) and math.isfinite(lam):
            warnings.warn(f"hop budget {lam} is fractional, using {math.floor(lam)}", UserWarning, stacklevel=2)
            lam = float(math.floor(lam))
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "s", int(s))
        object.__setattr__(self, "t", int(t))
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "weighted", bool(weighted))


class _Grid:
    """Points bucketed in square cells of side slightly above ``delta``.

    Points removed with :meth:`drop` disappear from later scans; cells
    are compacted lazily.
    """

    def __init__(self, P: PointSet, sq_delta: float):
        delta = math.sqrt(sq_delta)
        # the slack keeps pairs at distance exactly delta in adjacent cells
        self.w = delta * (1 + 1e-9) if delta > 0 else 1.0
        self.P = P
        self.sq_delta = sq_delta
        self.alive = np.ones(len(P), dtype=bool)
        gx = np.floor(P.x / self.w)
        gy = np.floor(P.y / self.w)
        self.gx, self.gy = gx, gy
        order = np.lexsort((gy, gx))
        keys = np.stack([gx[order], gy[order]], axis=1)
        starts = np.flatnonzero(np.r_[True, np.any(keys[1:] != keys[:-1], axis=1)])
        ends = np.r_[starts[1:], len(order)]
        self.cells = {
            (float(keys[a, 0]), float(keys[a, 1])): order[a:b] for a, b in zip(starts, ends)
        }

    def drop(self, i: int) -> None:
        self.alive[i] = False

    def neighbors(self, u: int):
        """Alive points within ``delta`` of ``u`` and their squared distances."""
        cx, cy = float(self.gx[u]), float(self.gy[u])
        found = []
        for dx in (-1.0, 0.0, 1.0):
            for dy in (-1.0, 0.0, 1.0):
                key = (cx + dx, cy + dy)
                ids = self.cells.get(key)
                if ids is None:
                    continue
                ids = ids[self.alive[ids]]
                if len(ids) == 0:
                    del self.cells[key]
                    continue
                self.cells[key] = ids
                found.append(ids)
        if not found:
            return np.empty(0, dtype=np.int64), np.empty(0)
        ids = np.concatenate(found)
        P = self.P
        d = sq_dist_arrays(P.x[u], P.y[u], P.x[ids], P.y[ids])
        keep = d <= self.sq_delta
        return ids[keep], d[keep]


def hop_distance(P: PointSet, s: int, t: int, sq_delta: float, limit: float = math.inf) -> float:
    """BFS hop count from ``s`` to ``t`` in ``G_delta``; stops past ``limit``."""
    grid = _Grid(P, sq_delta)
    grid.drop(s)
    frontier = [s]
    hops = 0
    while frontier and hops < limit:
        hops += 1
        nxt = []
        for u in frontier:
            ids, _ = grid.neighbors(u)
            for v in ids:
                grid.drop(v)
            if len(ids) and np.any(ids == t):
                return float(hops)
            nxt.extend(int(v) for v in ids)
        frontier = nxt
    return math.inf


def path_length(P: PointSet, s: int, t: int, sq_delta: float, limit: float = math.inf) -> float:
    """Dijkstra length from ``s`` to ``t`` in ``G_delta`` with Euclidean edge weights."""
    grid = _Grid(P, sq_delta)
    best = np.full(len(P), math.inf)
    best[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > best[u] or not grid.alive[u]:
            continue
        if u == t:
            return du
        if du > limit:
            break
        grid.drop(u)
        ids, d = grid.neighbors(u)
        nd = du + np.sqrt(d)
        better = nd < best[ids]
        for v, w in zip(ids[better], nd[better]):
            best[v] = w
            heapq.heappush(heap, (float(w), int(v)))
    return math.inf


def udg_decide(inst: RspInstance, sq_delta: float) -> bool:
    """Does ``G_delta`` have an ``s``-``t`` path within the budget?"""
    if sq_delta < 0:
        raise ValueError("threshold must be nonnegative")
    if inst.weighted:
        return path_length(inst.points, inst.s, inst.t, sq_delta, inst.lam) <= inst.lam
    return hop_distance(inst.points, inst.s, inst.t, sq_delta, inst.lam) <= inst.lam


def rsp_L(n: int, weighted: bool) -> float:
    lg = log2g(n)
    L = n ** 0.4 / lg ** 0.6 if weighted else n ** 0.4 * lg ** 1.2
    return float(min(max(L, 1.0), max(1.0, n * (n - 1) / 2)))


def rsp(inst: RspInstance, rng=None, cfg: Optional[FrameworkConfig] = None,
        stats: Optional[RunStats] = None, L: Optional[float] = None) -> float:
    """Least squared pairwise distance whose unit-disk graph meets the budget."""
    P = inst.points
    # the complete graph is the best case: one hop, or the straight segment
    if inst.weighted:
        direct = float(sq_dist_arrays(P.x[inst.s], P.y[inst.s], P.x[inst.t], P.y[inst.t]))
        feasible = math.sqrt(direct) <= inst.lam
    else:
        feasible = inst.lam >= 1
    if not feasible:
        raise NoFeasibleValue("the budget cannot be met even in the complete graph")
    if L is None:
        L = rsp_L(len(P), inst.weighted)
    return optimize_randomized(P, P, L, lambda v: udg_decide(inst, v), rng=rng, cfg=cfg, stats=stats)


__all__ = ["RspInstance", "hop_distance", "path_length", "rsp", "rsp_L", "udg_decide"]
