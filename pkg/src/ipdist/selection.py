"""k-th smallest interpoint distance.

The search keeps an interval ``(lo, hi]`` known to contain the answer.
Each stage covers the pairs in the interval by bicliques, samples
candidate distances along random regular graphs built on the biclique
sides, and keeps the weighted bucket of candidates that still holds the
answer.  Once few pairs remain in range they are enumerated directly.

Every decision here reduces to counting pairs at distance at most some
value, for which three interchangeable strategies are provided.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .brs import BrsOutput, CliqueCover, complete_brs, partial_brs_bipartite, partial_brs_selfjoin
from .core import (
    INF,
    FallbackToEnumeration,
    PointSet,
    RankOutOfRange,
    RunStats,
    SqInterval,
    WeightBoundViolated,
    as_point_set,
    coincident_cross_count,
    coincident_pair_count,
    kth_smallest,
    log2g,
    make_rng,
    sq_dist_arrays,
)

STRATEGIES = ("brute", "grid", "brs")
PAIR_CHUNK = 1 << 21


@dataclass(frozen=True)
class SelectionConfig:
    """Tuning constants for the stage loop.

    ``d`` is the degree of the sampling graphs, ``c_thresh`` scales the
    pair count below which a stage enumerates, ``c_guard`` scales the
    stage budget ``c_guard * log2 n`` after which the search gives up
    and enumerates everything.
    """

    d: int = 16
    c_thresh: float = 1.0
    c_guard: float = 4.0
    count_strategy: str = "grid"

    def __post_init__(self):
        if self.d < 4 or self.d % 2:
            raise ValueError("d must be an even integer >= 4")
        if self.count_strategy not in STRATEGIES:
            raise ValueError(f"unknown counting strategy {self.count_strategy!r}")


@dataclass(frozen=True)
class WeightedCandidate:
    value: float
    weight: float


@dataclass
class StageState:
    interval: SqInterval
    stage_index: int
    k: Optional[int] = None
    stats: dict = field(default_factory=dict)


# ---------------------------------------------------------------- counting


def _brute_cross_count(A: PointSet, B: PointSet, sq_delta: float, same: bool) -> int:
    n = len(A)
    rows = max(1, PAIR_CHUNK // max(1, len(B)))
    total = 0
    for s in range(0, n, rows):
        e = min(n, s + rows)
        d = sq_dist_arrays(A.x[s:e, None], A.y[s:e, None], B.x[None, :], B.y[None, :])
        if same:
            ii = np.arange(s, e)[:, None]
            jj = np.arange(len(B))[None, :]
            total += int(np.count_nonzero((d <= sq_delta) & (jj > ii)))
        else:
            total += int(np.count_nonzero(d <= sq_delta))
    return total


def _cell_index(v: np.ndarray, origin: float, w: float) -> np.ndarray:
    return np.floor((v - origin) / w).astype(np.int64)


def _grid_cross_count(A: PointSet, B: PointSet, sq_delta: float) -> int:
    """Ordered pairs ``(i, j)`` with ``sq_dist(A[i], B[j]) <= sq_delta``.

    Cells have side at least ``delta``, so a pair within ``delta`` lies in
    the same or an adjacent cell; each candidate is then compared
    exactly on squared values.
    """
    if len(A) == 0 or len(B) == 0:
        return 0
    xs = np.concatenate([A.x, B.x])
    ys = np.concatenate([A.y, B.y])
    x0, y0 = xs.min(), ys.min()
    extent = max(xs.max() - x0, ys.max() - y0, 1e-300)
    w = max(math.sqrt(sq_delta) * (1 + 1e-12), extent / 2**30)
    ax, ay = _cell_index(A.x, x0, w), _cell_index(A.y, y0, w)
    bx, by = _cell_index(B.x, x0, w), _cell_index(B.y, y0, w)
    ny = int(max(ay.max(), by.max())) + 3
    bkey = (bx + 1) * ny + (by + 1)
    order = np.argsort(bkey, kind="stable")
    skey = bkey[order]
    total = 0
    for ox in (-1, 0, 1):
        for oy in (-1, 0, 1):
            key = (ax + 1 + ox) * ny + (ay + 1 + oy)
            lo = np.searchsorted(skey, key, side="left")
            hi = np.searchsorted(skey, key, side="right")
            cnt = hi - lo
            nz = np.flatnonzero(cnt)
            if len(nz) == 0:
                continue
            cum = np.cumsum(cnt[nz])
            start = 0
            while start < len(nz):
                base = cum[start - 1] if start else 0
                stop = int(np.searchsorted(cum, base + PAIR_CHUNK, side="right"))
                stop = max(stop, start + 1)
                idx = nz[start:stop]
                c = cnt[idx]
                ia = np.repeat(idx, c)
                first = np.repeat(np.cumsum(c) - c, c)
                jb = order[np.repeat(lo[idx], c) + np.arange(len(ia)) - first]
                d = sq_dist_arrays(A.x[ia], A.y[ia], B.x[jb], B.y[jb])
                total += int(np.count_nonzero(d <= sq_delta))
                start = stop
    return total


def count_pairs_at_most(P, sq_delta: float, strategy: str = "grid", rng=None) -> int:
    """Number of unordered pairs of ``P`` at squared distance ``<= sq_delta``."""
    P = as_point_set(P)
    if sq_delta < 0:
        raise ValueError("sq_delta must be non-negative")
    n = len(P)
    if n < 2:
        return 0
    if strategy == "brute":
        return _brute_cross_count(P, P, sq_delta, same=True)
    if strategy == "grid":
        # ordered count over P x P includes the n self-pairs
        return (_grid_cross_count(P, P, sq_delta) - n) // 2
    if strategy == "brs":
        zero = coincident_pair_count(P)
        if sq_delta == 0:
            return zero
        cover = complete_brs(P, P, SqInterval(0.0, sq_delta), make_rng(rng))
        return cover.edge_count // 2 + zero
    raise ValueError(f"unknown counting strategy {strategy!r}")


def count_cross_pairs_at_most(A, B, sq_delta: float, strategy: str = "grid", rng=None) -> int:
    """Number of pairs ``(a, b)`` in ``A x B`` at squared distance ``<= sq_delta``."""
    A = as_point_set(A)
    B = as_point_set(B)
    if sq_delta < 0:
        raise ValueError("sq_delta must be non-negative")
    if strategy == "brute":
        return _brute_cross_count(A, B, sq_delta, same=False)
    if strategy == "grid":
        return _grid_cross_count(A, B, sq_delta)
    if strategy == "brs":
        zero = coincident_cross_count(A, B)
        if sq_delta == 0 or len(A) == 0 or len(B) == 0:
            return zero
        cover = complete_brs(A, B, SqInterval(0.0, sq_delta), make_rng(rng))
        return cover.edge_count + zero
    raise ValueError(f"unknown counting strategy {strategy!r}")


def _check_rank(k: int, total: int) -> None:
    if not 1 <= k <= total:
        raise RankOutOfRange(f"rank {k} outside 1..{total}")


def decide_rank(P, k: int, sq_delta: float, strategy: str = "grid") -> bool:
    """``True`` iff the k-th smallest pairwise squared distance is ``<= sq_delta``."""
    P = as_point_set(P)
    n = len(P)
    _check_rank(k, n * (n - 1) // 2)
    return count_pairs_at_most(P, sq_delta, strategy) >= k


# ------------------------------------------------------------- candidates


def _element_arrays(ptr: np.ndarray, idx: np.ndarray):
    """Biclique number and position within the side for every CSR entry."""
    sizes = np.diff(ptr)
    owner = np.repeat(np.arange(len(sizes)), sizes)
    local = np.arange(len(idx)) - ptr[:-1][owner]
    return owner, local


def expander_arrays(cover: CliqueCover, d: int, rng, A: PointSet, B: PointSet) -> Tuple[np.ndarray, np.ndarray]:
    """Values and weights of the sampled candidates, as parallel arrays.

    For a biclique with sides of sizes ``p >= q`` the large side is cut
    into ``g = p // q`` runs (the last one absorbs the remainder), and on
    each run plus the small side a random ``d``-regular multigraph is
    drawn as ``d / 2`` random perfect matchings (an odd vertex set leaves
    one vertex out of each matching).  Edges joining the two sides give
    candidates weighted ``|run| * q / (|run| + q)``; repeated edges count
    once.
    """
    rng = make_rng(rng)
    T = len(cover)
    if T == 0:
        return np.empty(0), np.empty(0)
    p = cover.a_sizes
    q = cover.b_sizes
    a_big = p >= q
    big = np.where(a_big, p, q)
    small = np.where(a_big, q, p)
    g = big // small
    goff = np.concatenate([[0], np.cumsum(g)])

    def side(ptr, idx, is_big):
        owner, local = _element_arrays(ptr, idx)
        bigm = is_big[owner]
        # big side: one run per element
        ob, lb = owner[bigm], local[bigm]
        run_b = np.minimum(lb // small[ob], g[ob] - 1)
        grp_b = goff[ob] + run_b
        pid_b = idx[bigm]
        # small side: copied into every run of its biclique
        os_, pid_s = owner[~bigm], idx[~bigm]
        reps = g[os_]
        grp_s = np.repeat(goff[os_], reps) + (np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps))
        return np.concatenate([grp_b, grp_s]), np.concatenate([pid_b, np.repeat(pid_s, reps)])

    grp_a, pid_a = side(cover.a_ptr, cover.a_idx, a_big)
    grp_b, pid_b = side(cover.b_ptr, cover.b_idx, ~a_big)
    grp = np.concatenate([grp_a, grp_b])
    pid = np.concatenate([pid_a, pid_b])
    is_b = np.concatenate([np.zeros(len(grp_a), dtype=bool), np.ones(len(grp_b), dtype=bool)])
    n_groups = int(goff[-1])
    gsize = np.bincount(grp, minlength=n_groups)
    gstart = np.concatenate([[0], np.cumsum(gsize)])[:-1]

    na = np.bincount(grp_a, minlength=n_groups)
    nb = np.bincount(grp_b, minlength=n_groups)
    weight_of_group = na * nb / np.maximum(na + nb, 1)

    keys = []
    nA, nB = len(A), len(B)
    for _ in range(d // 2):
        order = np.lexsort((rng.random(len(grp)), grp))
        g_sorted = grp[order]
        pos = np.arange(len(order)) - gstart[g_sorted]
        left = np.flatnonzero((pos % 2 == 0) & (pos + 1 < gsize[g_sorted]))
        u, v = order[left], order[left + 1]
        cross = is_b[u] != is_b[v]
        u, v = u[cross], v[cross]
        au = np.where(is_b[u], v, u)
        bv = np.where(is_b[u], u, v)
        keys.append((grp[au] * nA + pid[au]) * nB + pid[bv])
    key = np.unique(np.concatenate(keys))
    b_id = key % nB
    rest = key // nB
    a_id = rest % nA
    group = rest // nA
    values = sq_dist_arrays(A.x[a_id], A.y[a_id], B.x[b_id], B.y[b_id])
    return values, weight_of_group[group]


def build_expander_candidates(gamma: CliqueCover, d: int, rng, A, B) -> List[WeightedCandidate]:
    """Candidate distances sampled along random regular graphs on ``gamma``'s bicliques."""
    A = as_point_set(A)
    B = as_point_set(B)
    if d < 4 or d % 2:
        raise ValueError("d must be an even integer >= 4")
    values, weights = expander_arrays(gamma, d, rng, A, B)
    return [WeightedCandidate(float(v), float(w)) for v, w in zip(values, weights)]


# --------------------------------------------------------------- buckets


def partition_arrays(values: np.ndarray, weights: np.ndarray, m_stage: float) -> List[SqInterval]:
    """Cut the sorted values into buckets of weight at least ``m_stage / 4``.

    A bucket is closed as soon as its weight reaches the quarter, after
    absorbing every candidate tied with the closing value; a light
    remainder joins the last bucket.  Buckets are ``(prev, last value]``,
    the first one starting at 0.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if len(values) == 0:
        return []
    if weights.max() > m_stage / 4:
        raise WeightBoundViolated(f"candidate weight {weights.max()} exceeds m/4 = {m_stage / 4}")
    order = np.argsort(values, kind="stable")
    v = values[order]
    cum = np.cumsum(weights[order])
    quarter = m_stage / 4
    cuts: List[float] = []
    start = 0
    n = len(v)
    while start < n:
        base = cum[start - 1] if start else 0.0
        i = int(np.searchsorted(cum, base + quarter * (1 - 1e-12), side="left"))
        if i >= n:
            break
        i = int(np.searchsorted(v, v[i], side="right")) - 1
        cuts.append(float(v[i]))
        start = i + 1
    if not cuts:
        cuts = [float(v[-1])]
    elif start < n:
        cuts[-1] = float(v[-1])
    out = []
    prev = 0.0
    for c in cuts:
        out.append(SqInterval(prev, c))
        prev = c
    return out


def weighted_interval_partition(cands: Sequence[WeightedCandidate], total_pair_weight: float, d: int) -> List[SqInterval]:
    """Buckets of candidates with weight in ``[m/4, m/2)`` each (ties aside), at most ``2d`` of them."""
    values = np.array([c.value for c in cands], dtype=np.float64)
    weights = np.array([c.weight for c in cands], dtype=np.float64)
    return partition_arrays(values, weights, total_pair_weight)


def _bucket_search(cuts: Sequence[float], interval: SqInterval, decide) -> SqInterval:
    """Binary search for the bucket holding the answer; ``cuts`` increasing inside ``interval``."""
    bounds = [interval.lo] + [c for c in cuts if interval.lo < c < interval.hi] + [interval.hi]
    lo, hi = 0, len(bounds) - 1  # decide(bounds[hi]) holds, decide(bounds[lo]) fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if decide(bounds[mid]):
            hi = mid
        else:
            lo = mid
    return SqInterval(bounds[lo], bounds[hi])


# ------------------------------------------------------------- stage loop


@dataclass
class StagePlan:
    """Problem-specific pieces plugged into :func:`run_stages`."""

    A: PointSet
    B: PointSet
    brs: Callable[[SqInterval], BrsOutput]
    decide: Callable[[float], bool]
    finish: Callable[[BrsOutput, SqInterval], float]
    fallback: Callable[[], float]
    threshold: float
    max_stages: int
    start: SqInterval = field(default_factory=SqInterval)


def run_stages(plan: StagePlan, cfg: SelectionConfig, rng, stats: RunStats, trace: Optional[list] = None) -> float:
    """Narrow ``plan.start`` stage by stage until enumeration is cheap."""
    interval = plan.start
    for j in range(1, plan.max_stages + 1):
        out = plan.brs(interval)
        m_stage = out.gamma.edge_count
        stats.stages = j
        stats.gamma_edges += m_stage
        stats.pi_pairs += out.pi.edge_count
        state = StageState(interval, j, stats={"gamma_edges": m_stage, "pi_pairs": out.pi.edge_count})
        if trace is not None:
            trace.append(state)
        if m_stage <= plan.threshold:
            state.stats["final"] = True
            return plan.finish(out, interval)
        values, weights = expander_arrays(out.gamma, cfg.d, rng, plan.A, plan.B)
        buckets = partition_arrays(values, weights, m_stage)
        cuts = [b.hi for b in buckets[:-1]]
        if not cuts and len(values):
            # too little sampled weight for two buckets: split at the weighted median
            order = np.argsort(values)
            half = np.searchsorted(np.cumsum(weights[order]), weights.sum() / 2)
            cuts = [float(values[order][min(half, len(order) - 1)])]
        new = _bucket_search(cuts, interval, plan.decide)
        state.stats["candidates"] = len(values)
        state.stats["buckets"] = len(buckets)
        interval = new
    warnings.warn(
        f"stage budget of {plan.max_stages} exhausted; enumerating all pairs",
        FallbackToEnumeration,
        stacklevel=3,
    )
    stats.fallback = True
    return plan.fallback()


def _counting_decide(count: Callable[[float], int], k: int, stats: RunStats):
    def decide(v: float) -> bool:
        stats.decision_calls += 1
        return count(v) >= k
    return decide


def _enumerate_kth_self(P: PointSet, k: int) -> float:
    i, j = np.triu_indices(len(P), 1)
    return kth_smallest(P.sq_dists(i, P, j), k)


def _enumerate_kth_cross(A: PointSet, B: PointSet, k: int) -> float:
    d = sq_dist_arrays(A.x[:, None], A.y[:, None], B.x[None, :], B.y[None, :]).ravel()
    return kth_smallest(d, k)


def _in_range_pairs(out: BrsOutput, interval: SqInterval, A: PointSet, B: PointSet, upper_only: bool) -> np.ndarray:
    chunks = []
    for cover in (out.gamma, out.pi):
        a, b = cover.pairs()
        if upper_only:
            keep = a < b
            a, b = a[keep], b[keep]
        d = A.sq_dists(a, B, b)
        if cover is out.pi:
            d = d[interval.mask(d)]
        chunks.append(d)
    return np.concatenate(chunks)


def select_distance(P, k: int, rng=None, cfg: Optional[SelectionConfig] = None,
                    stats: Optional[RunStats] = None, trace: Optional[list] = None) -> float:
    """Squared k-th smallest distance among the ``n(n-1)/2`` pairs of ``P``.

    Ties count with multiplicity.  ``stats`` and ``trace`` (a list that
    receives one :class:`StageState` per stage) are optional outputs.
    """
    P = as_point_set(P)
    cfg = cfg or SelectionConfig()
    stats = stats if stats is not None else RunStats()
    rng = make_rng(rng)
    n = len(P)
    if n < 2:
        raise RankOutOfRange("need at least two points")
    _check_rank(k, n * (n - 1) // 2)
    if k <= coincident_pair_count(P):
        return 0.0

    def count(v: float) -> int:
        return count_pairs_at_most(P, v, cfg.count_strategy, rng)

    def finish(out: BrsOutput, interval: SqInterval) -> float:
        vals = _in_range_pairs(out, interval, P, P, upper_only=True)
        k_lo = count(interval.lo)
        return kth_smallest(vals, k - k_lo)

    plan = StagePlan(
        A=P,
        B=P,
        brs=lambda I: partial_brs_selfjoin(P, I, rng),
        decide=_counting_decide(count, k, stats),
        finish=finish,
        fallback=lambda: _enumerate_kth_self(P, k),
        threshold=cfg.c_thresh * n ** (4 / 3) * log2g(n),
        max_stages=max(1, math.ceil(cfg.c_guard * log2g(n))),
    )
    return run_stages(plan, cfg, rng, stats, trace)


def bipartite_threshold(m: int, n: int, c: float = 1.0) -> float:
    return c * ((m * n) ** (2 / 3) + m * log2g(n) + n * log2g(m)) * log2g(m + n)


def select_distance_bipartite(A, B, k: int, rng=None, cfg: Optional[SelectionConfig] = None,
                              stats: Optional[RunStats] = None, trace: Optional[list] = None) -> float:
    """Squared k-th smallest distance among the ``|A| * |B|`` cross pairs."""
    A = as_point_set(A)
    B = as_point_set(B)
    cfg = cfg or SelectionConfig()
    stats = stats if stats is not None else RunStats()
    rng = make_rng(rng)
    m, n = len(A), len(B)
    _check_rank(k, m * n)
    if k <= coincident_cross_count(A, B):
        return 0.0

    def count(v: float) -> int:
        return count_cross_pairs_at_most(A, B, v, cfg.count_strategy, rng)

    def finish(out: BrsOutput, interval: SqInterval) -> float:
        vals = _in_range_pairs(out, interval, A, B, upper_only=False)
        return kth_smallest(vals, k - count(interval.lo))

    plan = StagePlan(
        A=A,
        B=B,
        brs=lambda I: partial_brs_bipartite(A, B, I, rng),
        decide=_counting_decide(count, k, stats),
        finish=finish,
        fallback=lambda: _enumerate_kth_cross(A, B, k),
        threshold=bipartite_threshold(m, n, cfg.c_thresh),
        max_stages=max(1, math.ceil(cfg.c_guard * log2g(m + n))),
    )
    return run_stages(plan, cfg, rng, stats, trace)


__all__ = [
    "INF",
    "SelectionConfig",
    "StagePlan",
    "StageState",
    "WeightedCandidate",
    "bipartite_threshold",
    "build_expander_candidates",
    "count_cross_pairs_at_most",
    "count_pairs_at_most",
    "decide_rank",
    "expander_arrays",
    "partition_arrays",
    "run_stages",
    "select_distance",
    "select_distance_bipartite",
    "weighted_interval_partition",
]
