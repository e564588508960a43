"""Optimization over interpoint distances driven by a decision procedure.

Both optimizers look for the least cross distance ``v`` (squared) of
``A x B`` accepted by a monotone ``decision(v)``, meaning "the optimum is
at most ``v``".  :func:`optimize_deterministic` runs the same expander
stages as distance selection with ``decision`` as the oracle;
:func:`optimize_randomized` first shrinks the search interval by random
sampling until it holds about ``L`` distances and then enumerates them.

Passing the same object as ``A`` and ``B`` selects the self-join, where
a point is never paired with itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .brs import BrsOutput, brs_for_L, partial_brs_bipartite
from .core import (
    INF,
    NoFeasibleValue,
    PointSet,
    RunStats,
    SqInterval,
    as_point_set,
    coincident_cross_count,
    coincident_pair_count,
    log2g,
    make_rng,
    sq_dist_arrays,
)
from .selection import SelectionConfig, StagePlan, bipartite_threshold, run_stages

DecisionFn = Callable[[float], bool]


@dataclass(frozen=True)
class FrameworkConfig:
    """Constants of both optimizers.

    ``c2`` sizes the sample that tests the uncertain pairs, ``c_R`` the
    sample that splits the interval, ``c_rounds`` caps shrinking rounds at
    ``c_rounds * log2(m+n)``, ``c_retry`` bounds the enumerated candidates
    at ``c_retry * L`` before shrinking is redone, ``sample_cap`` caps
    rejection-sampling attempts per wanted draw.
    """

    d: int = 16
    c_thresh: float = 1.0
    c_guard: float = 4.0
    c2: float = 8.0
    c_R: float = 8.0
    c_rounds: float = 4.0
    c_retry: float = 4.0
    sample_cap: int = 64
    max_reruns: int = 8

    @property
    def selection(self) -> SelectionConfig:
        return SelectionConfig(d=self.d, c_thresh=self.c_thresh, c_guard=self.c_guard)


@dataclass
class ShrinkResult:
    interval: SqInterval
    claimed_L: float
    rounds: int
    decision_calls: int
    low_confidence: bool = False
    stalled: bool = False


class _Counted:
    """Wraps a decision so every call is counted."""

    def __init__(self, decision: DecisionFn, stats: RunStats):
        self.decision = decision
        self.stats = stats

    def __call__(self, v: float) -> bool:
        self.stats.decision_calls += 1
        return bool(self.decision(float(v)))


def _least_feasible(values: np.ndarray, decide) -> Optional[float]:
    """Least value of ``values`` accepted by the monotone ``decide``, by binary search."""
    vals = np.unique(values)
    lo, hi = -1, len(vals)  # decide fails at lo, holds at hi (virtual ends)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if decide(vals[mid]):
            hi = mid
        else:
            lo = mid
    return float(vals[hi]) if hi < len(vals) else None


def _recorded_values(out: BrsOutput, interval: SqInterval, A: PointSet, B: PointSet, self_join: bool) -> np.ndarray:
    """Every recorded distance in ``interval`` (``gamma`` pairs plus in-range ``pi`` pairs)."""
    chunks = []
    for cover, filt in ((out.gamma, False), (out.pi, True)):
        a, b = cover.pairs()
        if self_join:
            keep = a < b
            a, b = a[keep], b[keep]
        d = A.sq_dists(a, B, b)
        chunks.append(d[interval.mask(d)] if filt else d)
    return np.concatenate(chunks)


def _all_cross_values(A: PointSet, B: PointSet, self_join: bool) -> np.ndarray:
    if self_join:
        i, j = np.triu_indices(len(A), 1)
        return A.sq_dists(i, A, j)
    return sq_dist_arrays(A.x[:, None], A.y[:, None], B.x[None, :], B.y[None, :]).ravel()


def _zero_is_optimal(A: PointSet, B: PointSet, self_join: bool, decide) -> bool:
    zero = coincident_pair_count(A) if self_join else coincident_cross_count(A, B)
    return zero > 0 and decide(0.0)


# ----------------------------------------------------------- deterministic


def optimize_deterministic(A, B, decision: DecisionFn, rng=None, cfg: Optional[FrameworkConfig] = None,
                           stats: Optional[RunStats] = None, trace: Optional[list] = None) -> float:
    """Least cross distance accepted by ``decision``, by expander stages."""
    self_join = A is B
    A = as_point_set(A)
    B = A if self_join else as_point_set(B)
    if len(A) == 0 or len(B) == 0 or (self_join and len(A) < 2):
        raise NoFeasibleValue("no pairs to optimize over")
    cfg = cfg or FrameworkConfig()
    stats = stats if stats is not None else RunStats()
    rng = make_rng(rng)
    decide = _Counted(decision, stats)
    if _zero_is_optimal(A, B, self_join, decide):
        return 0.0
    m, n = len(A), len(B)

    def finish(out: BrsOutput, interval: SqInterval) -> float:
        v = _least_feasible(_recorded_values(out, interval, A, B, self_join), decide)
        if v is None:
            raise NoFeasibleValue("decision rejects every candidate distance")
        return v

    def fallback() -> float:
        v = _least_feasible(_all_cross_values(A, B, self_join), decide)
        if v is None:
            raise NoFeasibleValue("decision rejects every candidate distance")
        return v

    plan = StagePlan(
        A=A,
        B=B,
        brs=lambda I: partial_brs_bipartite(A, B, I, rng),
        decide=decide,
        finish=finish,
        fallback=fallback,
        threshold=bipartite_threshold(m, n, cfg.c_thresh),
        max_stages=max(1, math.ceil(cfg.c_guard * log2g(m + n))),
    )
    return run_stages(plan, cfg.selection, rng, stats, trace)


# --------------------------------------------------------------- shrinking


def _uncertain_in_range(out: BrsOutput, interval: SqInterval, A: PointSet, B: PointSet,
                        size: int, rng, self_join: bool) -> float:
    """Estimated number of in-range recorded pairs of ``out.pi`` (exact when small)."""
    M = out.pi.edge_count
    if M == 0:
        return 0.0
    if M <= size:
        a, b = out.pi.pairs()
    else:
        a, b = out.pi.sample_pairs(size, rng)
    d = A.sq_dists(a, B, b)
    hit = interval.mask(d)
    if self_join:
        hit &= a != b
    return float(hit.mean()) * M


def _draw_in_range(out: BrsOutput, interval: SqInterval, A: PointSet, B: PointSet, size: int,
                   rng, cap: int) -> np.ndarray:
    """Up to ``size`` values drawn uniformly from the in-range recorded pairs.

    A pair is drawn uniformly from all recorded pairs and rejected when
    it falls outside the interval (only ``pi`` pairs can).  After ``cap``
    draws without enough hits, only ``gamma`` is sampled.
    """
    g = out.gamma.edge_count
    M = out.pi.edge_count
    got = []
    have = 0
    tries = 0
    while have < size and tries < cap and g + M > 0:
        batch = max(size - have, 16)
        tries += batch
        from_g = rng.random(batch) * (g + M) < g
        ng = int(from_g.sum())
        if ng:
            a, b = out.gamma.sample_pairs(ng, rng)
            got.append(A.sq_dists(a, B, b))
            have += ng
        if batch - ng:
            a, b = out.pi.sample_pairs(batch - ng, rng)
            d = A.sq_dists(a, B, b)
            d = d[interval.mask(d)]
            got.append(d)
            have += len(d)
    if have < size and g > 0:
        a, b = out.gamma.sample_pairs(size - have, rng)
        got.append(A.sq_dists(a, B, b))
    if not got:
        return np.empty(0)
    return np.concatenate(got)[:size]


def _shrink(A: PointSet, B: PointSet, L: float, decide, rng, cfg: FrameworkConfig, self_join: bool,
            stats: RunStats) -> ShrinkResult:
    m, n = len(A), len(B)
    lg = log2g(m + n)
    interval = SqInterval(0.0, INF)
    calls0 = stats.decision_calls
    cap_rounds = max(1, math.ceil(cfg.c_rounds * lg))
    r_size = max(1, math.ceil(cfg.c_R * lg))
    rounds = 0
    # self-joins record each unordered pair twice
    mult = 2 if self_join else 1
    while rounds < cap_rounds:
        rounds += 1
        out = brs_for_L(A, B, interval, L * mult, rng)
        s1 = out.gamma.edge_count / mult
        M = out.pi.edge_count / mult
        if s1 + M <= L:
            # every in-range pair is recorded, so this bound is exact
            return ShrinkResult(interval, L, rounds, stats.decision_calls - calls0)
        if s1 <= L / 2:
            size = max(1, math.ceil(cfg.c2 * max(1.0, M / L) * lg))
            est = _uncertain_in_range(out, interval, A, B, size, rng, self_join) / mult
            if est <= 0.75 * L / 2:
                return ShrinkResult(interval, L, rounds, stats.decision_calls - calls0)
        sample = _draw_in_range(out, interval, A, B, r_size, rng, cfg.sample_cap * r_size)
        if len(sample) == 0:
            return ShrinkResult(interval, L, rounds, stats.decision_calls - calls0)
        cuts = np.unique(sample)
        bounds = [interval.lo] + [float(c) for c in cuts if interval.lo < c < interval.hi] + [interval.hi]
        lo, hi = 0, len(bounds) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if decide(bounds[mid]):
                hi = mid
            else:
                lo = mid
        nxt = SqInterval(bounds[lo], bounds[hi])
        if nxt == interval:
            # tied distances: the sample cannot split the interval any further
            return ShrinkResult(interval, L, rounds, stats.decision_calls - calls0, stalled=True)
        interval = nxt
    return ShrinkResult(interval, L, rounds, stats.decision_calls - calls0, low_confidence=True)


def shrink_interval(A, B, L: float, decision: DecisionFn, rng=None, cfg: Optional[FrameworkConfig] = None,
                    stats: Optional[RunStats] = None) -> ShrinkResult:
    """Interval ``(lo, hi]`` holding the optimum and, with high probability, at most ``L`` distances.

    Assumes the optimum is positive (a zero optimum is handled by the
    callers before shrinking).  After every round ``decision(hi)`` holds
    and ``decision(lo)`` fails unless ``lo == 0``.
    """
    self_join = A is B
    A = as_point_set(A)
    B = A if self_join else as_point_set(B)
    cfg = cfg or FrameworkConfig()
    stats = stats if stats is not None else RunStats()
    total = len(A) * (len(A) - 1) / 2 if self_join else len(A) * len(B)
    L = float(min(max(1.0, L), max(1.0, total)))
    res = _shrink(A, B, L, _Counted(decision, stats), make_rng(rng), cfg, self_join, stats)
    stats.shrink_rounds = (stats.shrink_rounds or 0) + res.rounds
    return res


# -------------------------------------------------------------- randomized


def optimize_randomized(A, B, L: float, decision: DecisionFn, rng=None, cfg: Optional[FrameworkConfig] = None,
                        stats: Optional[RunStats] = None) -> float:
    """Least cross distance accepted by ``decision``: shrink, then enumerate and search."""
    self_join = A is B
    A = as_point_set(A)
    B = A if self_join else as_point_set(B)
    if len(A) == 0 or len(B) == 0 or (self_join and len(A) < 2):
        raise NoFeasibleValue("no pairs to optimize over")
    cfg = cfg or FrameworkConfig()
    stats = stats if stats is not None else RunStats()
    rng = make_rng(rng)
    decide = _Counted(decision, stats)
    if _zero_is_optimal(A, B, self_join, decide):
        return 0.0
    total = len(A) * (len(A) - 1) / 2 if self_join else len(A) * len(B)
    L = float(min(max(1.0, L), max(1.0, total)))
    mult = 2 if self_join else 1
    for attempt in range(cfg.max_reruns + 1):
        res = _shrink(A, B, L, decide, rng, cfg, self_join, stats)
        stats.shrink_rounds = (stats.shrink_rounds or 0) + res.rounds
        stats.stages += 1
        out = brs_for_L(A, B, res.interval, L * mult, rng)
        stats.gamma_edges += out.gamma.edge_count
        stats.pi_pairs += out.pi.edge_count
        values = _recorded_values(out, res.interval, A, B, self_join)
        distinct = len(np.unique(values))
        if distinct > cfg.c_retry * L and not res.stalled and attempt < cfg.max_reruns:
            continue
        v = _least_feasible(values, decide)
        if v is None:
            raise NoFeasibleValue("decision rejects every candidate distance")
        return v
    raise AssertionError("unreachable")


__all__ = [
    "DecisionFn",
    "FrameworkConfig",
    "ShrinkResult",
    "optimize_deterministic",
    "optimize_randomized",
    "shrink_interval",
]
