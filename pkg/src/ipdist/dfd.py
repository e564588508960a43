"""Discrete Frechet distance with shortcuts.

Two frogs walk along ``a_1..a_m`` and ``b_1..b_n`` on a leash of length
``delta``; in each move exactly one frog jumps forward.  In the two-sided
variant either frog may skip points, in the one-sided variant only the
A-frog may, and the B-frog visits every point.  All thresholds and
results are squared distances.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import PointSequence, RunStats, log2g, sq_dist_arrays
from .framework import FrameworkConfig, optimize_deterministic, optimize_randomized


@dataclass(frozen=True)
class DfdInstance:
    a_seq: PointSequence
    b_seq: PointSequence

    def __init__(self, a_seq, b_seq):
        a = a_seq if isinstance(a_seq, PointSequence) else PointSequence(a_seq)
        b = b_seq if isinstance(b_seq, PointSequence) else PointSequence(b_seq)
        object.__setattr__(self, "a_seq", a)
        object.__setattr__(self, "b_seq", b)

    @property
    def m(self) -> int:
        return len(self.a_seq)

    @property
    def n(self) -> int:
        return len(self.b_seq)

    def row(self, i: int, sq_delta: float) -> np.ndarray:
        """Leash predicate of ``a_i`` against every ``b_j`` (0-based ``i``)."""
        a, b = self.a_seq, self.b_seq
        return sq_dist_arrays(a.x[i], a.y[i], b.x, b.y) <= sq_delta

    def column(self, j: int, sq_delta: float) -> np.ndarray:
        a, b = self.a_seq, self.b_seq
        return sq_dist_arrays(a.x, a.y, b.x[j], b.y[j]) <= sq_delta


def dfd2_decide(inst: DfdInstance, sq_delta: float) -> bool:
    """Can both frogs reach their last points with shortcuts on both sides?

    Row by row: ``col_seen[j]`` records that some earlier row reached
    column ``j``, and within a row a cell is reachable once any cell to
    its left is (prefix OR).
    """
    m, n = inst.m, inst.n
    col_seen = np.zeros(n, dtype=bool)
    for i in range(m):
        row = inst.row(i, sq_delta)
        if i == 0:
            entry = np.zeros(n, dtype=bool)
            entry[0] = True
        else:
            entry = col_seen
        # reachable = row & (entered from above, or some reachable cell to the left)
        start = row & entry
        reach = row & np.logical_or.accumulate(start)
        if i == m - 1:
            return bool(reach[n - 1])
        col_seen = col_seen | reach
    return False


def dfd1_decide(inst: DfdInstance, sq_delta: float) -> bool:
    """Greedy decision for the one-sided variant.

    Only the least reachable A-index per B-point matters: a smaller index
    can jump to any index a larger one can.  Before the B-frog steps from
    ``b_{j-1}`` to ``b_j`` the A-frog moves to the least ``i0 >= i`` that
    is within the leash of both.
    """
    m, n = inst.m, inst.n
    prev = inst.column(0, sq_delta)
    if not prev[0]:
        return False
    i = 0
    for j in range(1, n):
        cur = inst.column(j, sq_delta)
        ok = np.flatnonzero(prev[i:] & cur[i:])
        if len(ok) == 0:
            return False
        i += int(ok[0])
        prev = cur
    return bool(prev[m - 1])


def dfd1_L(m: int, n: int) -> float:
    s = m + n
    return float(min(max(s ** 0.4 * log2g(s) ** 1.8, 1.0), m * n))


def dfd2(inst: DfdInstance, rng=None, cfg: Optional[FrameworkConfig] = None,
         stats: Optional[RunStats] = None, trace: Optional[list] = None) -> float:
    """Two-sided DFD with shortcuts (squared)."""
    return optimize_deterministic(inst.a_seq, inst.b_seq, lambda v: dfd2_decide(inst, v),
                                  rng=rng, cfg=cfg, stats=stats, trace=trace)


def dfd1(inst: DfdInstance, rng=None, cfg: Optional[FrameworkConfig] = None,
         stats: Optional[RunStats] = None, L: Optional[float] = None) -> float:
    """One-sided DFD with shortcuts (squared)."""
    if L is None:
        L = dfd1_L(inst.m, inst.n)
    return optimize_randomized(inst.a_seq, inst.b_seq, L, lambda v: dfd1_decide(inst, v),
                               rng=rng, cfg=cfg, stats=stats)


__all__ = ["DfdInstance", "dfd1", "dfd1_L", "dfd1_decide", "dfd2", "dfd2_decide"]
