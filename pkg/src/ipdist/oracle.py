"""Brute-force reference implementations.

Nothing here imports from the algorithmic modules: only ``core``
primitives are shared, so agreement with the fast paths is evidence
rather than tautology.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .core import NoFeasibleValue, PointSet, RankOutOfRange, SqInterval, as_point_set, sq_dist_arrays


def all_pair_sq_dists(P) -> np.ndarray:
    """All ``n(n-1)/2`` unordered squared distances."""
    P = as_point_set(P)
    i, j = np.triu_indices(len(P), 1)
    return sq_dist_arrays(P.x[i], P.y[i], P.x[j], P.y[j])


def cross_sq_dists(A, B) -> np.ndarray:
    """All ``m * n`` squared distances between ``A`` and ``B`` (row-major)."""
    A = as_point_set(A)
    B = as_point_set(B)
    return sq_dist_arrays(A.x[:, None], A.y[:, None], B.x[None, :], B.y[None, :])


def brute_count(P, sq_delta: float) -> int:
    return int(np.count_nonzero(all_pair_sq_dists(P) <= sq_delta))


def brute_kth(P, k: int) -> float:
    d = all_pair_sq_dists(P)
    if not 1 <= k <= len(d):
        raise RankOutOfRange(f"rank {k} outside 1..{len(d)}")
    return float(np.sort(d)[k - 1])


def brute_kth_bipartite(A, B, k: int) -> float:
    d = cross_sq_dists(A, B).ravel()
    if not 1 <= k <= len(d):
        raise RankOutOfRange(f"rank {k} outside 1..{len(d)}")
    return float(np.sort(d)[k - 1])


def brute_min_feasible(candidates, decision: Callable[[float], bool]) -> float:
    """Least candidate accepted by ``decision``, by a linear sweep."""
    for v in np.unique(np.asarray(candidates, dtype=np.float64)):
        if decision(float(v)):
            return float(v)
    raise NoFeasibleValue("no candidate satisfies the decision")


@dataclass
class BrsReport:
    ok: bool
    message: str = ""
    pair: Optional[Tuple[int, int]] = None
    checked_pairs: int = 0
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def brute_brs_check(A, B, interval: SqInterval, out, require_empty_pi: bool = False) -> BrsReport:
    """Exhaustively verify a batched range searching result.

    Checks that every pair of every ``gamma`` biclique is in range, that no
    ordered pair is recorded twice across ``gamma`` and ``pi``, and that
    every in-range pair is recorded.  ``out`` needs ``gamma`` and ``pi``
    attributes iterable as objects with ``a_side`` / ``b_side``.
    """
    A = as_point_set(A)
    B = as_point_set(B)
    m, n = len(A), len(B)
    if m * n > 10**6:
        raise ValueError("instance too large for exhaustive checking")
    count = np.zeros((m, n), dtype=np.int64)
    for role, cover in (("gamma", out.gamma), ("pi", getattr(out, "pi", None) or [])):
        for t, bc in enumerate(cover):
            a = np.asarray(bc.a_side, dtype=np.int64)
            b = np.asarray(bc.b_side, dtype=np.int64)
            if len(a) == 0 or len(b) == 0:
                return BrsReport(False, f"empty side in {role} biclique {t}")
            if len(np.unique(a)) != len(a) or len(np.unique(b)) != len(b):
                return BrsReport(False, f"repeated vertex in {role} biclique {t}")
            if role == "gamma":
                d = sq_dist_arrays(A.x[a][:, None], A.y[a][:, None], B.x[b][None, :], B.y[b][None, :])
                bad = ~((d > interval.lo) & (d <= interval.hi))
                if bad.any():
                    i, j = np.argwhere(bad)[0]
                    return BrsReport(False, f"gamma biclique {t} certifies an out-of-range pair",
                                     (int(a[i]), int(b[j])))
            np.add.at(count, (np.repeat(a, len(b)), np.tile(b, len(a))), 1)
    dup = np.argwhere(count > 1)
    if len(dup):
        i, j = dup[0]
        return BrsReport(False, "pair recorded more than once", (int(i), int(j)))
    d = cross_sq_dists(A, B)
    inr = (d > interval.lo) & (d <= interval.hi)
    missing = np.argwhere(inr & (count == 0))
    if len(missing):
        i, j = missing[0]
        return BrsReport(False, "in-range pair not recorded", (int(i), int(j)))
    if require_empty_pi:
        extra = sum(1 for _ in (getattr(out, "pi", None) or []))
        if extra:
            return BrsReport(False, "uncertain collection expected to be empty")
    return BrsReport(True, "ok", None, m * n, {"in_range": int(inr.sum()), "recorded": int(count.sum())})


# -------------------------------------------------------------- Frechet


def _leash(A, B, sq_delta):
    A = as_point_set(A)
    B = as_point_set(B)
    return cross_sq_dists(A, B) <= sq_delta


def brute_dfd2(A, B, sq_delta: float) -> bool:
    """Explicit BFS: a move jumps one frog forward by any number of points."""
    M = _leash(A, B, sq_delta)
    m, n = M.shape
    if not M[0, 0]:
        return False
    seen = np.zeros((m, n), dtype=bool)
    seen[0, 0] = True
    q = deque([(0, 0)])
    while q:
        i, j = q.popleft()
        if (i, j) == (m - 1, n - 1):
            return True
        for i2 in range(i + 1, m):
            if M[i2, j] and not seen[i2, j]:
                seen[i2, j] = True
                q.append((i2, j))
        for j2 in range(j + 1, n):
            if M[i, j2] and not seen[i, j2]:
                seen[i, j2] = True
                q.append((i, j2))
    return bool(seen[m - 1, n - 1])


def brute_dfd1(A, B, sq_delta: float) -> bool:
    """Explicit BFS: the A-frog may jump ahead, the B-frog steps one point at a time."""
    M = _leash(A, B, sq_delta)
    m, n = M.shape
    if not M[0, 0]:
        return False
    seen = np.zeros((m, n), dtype=bool)
    seen[0, 0] = True
    q = deque([(0, 0)])
    while q:
        i, j = q.popleft()
        nxt = [(i2, j) for i2 in range(i + 1, m)]
        if j + 1 < n:
            nxt.append((i, j + 1))
        for i2, j2 in nxt:
            if M[i2, j2] and not seen[i2, j2]:
                seen[i2, j2] = True
                q.append((i2, j2))
    return bool(seen[m - 1, n - 1])


def brute_classic_dfd(A, B) -> float:
    """Classic discrete Frechet distance (squared), Eiter-Mannila recurrence."""
    D = cross_sq_dists(A, B)
    m, n = D.shape
    ca = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            if i == 0 and j == 0:
                best = D[0, 0]
            elif i == 0:
                best = ca[0, j - 1]
            elif j == 0:
                best = ca[i - 1, 0]
            else:
                best = min(ca[i - 1, j], ca[i, j - 1], ca[i - 1, j - 1])
            ca[i, j] = max(best, D[i, j])
    return float(ca[m - 1, n - 1])


def brute_sweep(A, B, decide: Callable[[float], bool]) -> float:
    """Least cross squared distance accepted by ``decide``."""
    return brute_min_feasible(cross_sq_dists(A, B).ravel(), decide)


# ------------------------------------------------------------------- RSP


def _hops(P: PointSet, s: int, t: int, sq_delta: float) -> float:
    n = len(P)
    dist = [-1] * n
    dist[s] = 0
    q = deque([s])
    xs, ys = P.x, P.y
    while q:
        u = q.popleft()
        if u == t:
            return dist[u]
        d = sq_dist_arrays(xs[u], ys[u], xs, ys)
        for v in np.flatnonzero(d <= sq_delta):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                q.append(int(v))
    return math.inf


def _length(P: PointSet, s: int, t: int, sq_delta: float) -> float:
    n = len(P)
    best = np.full(n, math.inf)
    best[s] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(0.0, s)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == t:
            return du
        d = sq_dist_arrays(P.x[u], P.y[u], P.x, P.y)
        for v in np.flatnonzero((d <= sq_delta) & ~done):
            nd = du + math.sqrt(d[v])
            if nd < best[v]:
                best[v] = nd
                heapq.heappush(heap, (nd, int(v)))
    return math.inf


def brute_rsp_decide(P, s: int, t: int, lam: float, weighted: bool, sq_delta: float) -> bool:
    P = as_point_set(P)
    if weighted:
        return _length(P, s, t, sq_delta) <= lam
    return _hops(P, s, t, sq_delta) <= math.floor(lam)


def brute_rsp(P, s: int, t: int, lam: float, weighted: bool = False) -> float:
    """Least pairwise squared distance whose unit-disk graph meets the path budget."""
    P = as_point_set(P)
    if len(P) > 1500:
        raise ValueError("instance too large for the brute-force sweep")
    cands = np.unique(np.concatenate([[0.0], all_pair_sq_dists(P)]))
    for v in cands:
        if brute_rsp_decide(P, s, t, lam, weighted, float(v)):
            return float(v)
    raise NoFeasibleValue("path budget cannot be met even in the complete graph")
