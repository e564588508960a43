"""Batched range searching: clique covers of the pairs with distance in ``(lo, hi]``.

Given point sets ``A`` and ``B`` and a squared-distance interval, the
output is two collections of complete bipartite graphs ``A_t x B_t``:

* ``gamma`` -- every pair in every graph is in range;
* ``pi`` -- pairs whose status is unknown.

Every in-range pair of ``A x B`` lies in exactly one graph of
``gamma`` union ``pi`` and no pair lies in two graphs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .core import EmptyCollection, PointSet, SqInterval, as_point_set, log2g, make_rng
from .cuttings import (
    DEFAULT_RHO,
    CircleSet,
    build_hierarchical_cutting,
    compute_contained_annuli,
    conflict_owners,
    locate_points,
)

BRUTE_CUTOFF = 1024
# subproblems of a partial round with at most this many pairs are scanned directly
SCAN_CUTOFF = 4096

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class Biclique:
    a_side: np.ndarray
    b_side: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.a_side) * len(self.b_side)


class CliqueCover:
    """A collection of bicliques stored as two CSR arrays.

    ``a_idx[a_ptr[t]:a_ptr[t+1]]`` is the A side of biclique ``t``.
    """

    def __init__(self, role: str, a_idx=None, a_ptr=None, b_idx=None, b_ptr=None):
        self.role = role
        self.a_idx = _EMPTY if a_idx is None else a_idx
        self.a_ptr = np.zeros(1, dtype=np.int64) if a_ptr is None else a_ptr
        self.b_idx = _EMPTY if b_idx is None else b_idx
        self.b_ptr = np.zeros(1, dtype=np.int64) if b_ptr is None else b_ptr

    @classmethod
    def from_bicliques(cls, role: str, bicliques) -> "CliqueCover":
        b = CoverBuilder(role)
        for bc in bicliques:
            a_side, b_side = (bc.a_side, bc.b_side) if isinstance(bc, Biclique) else bc
            b.add(np.asarray(a_side, dtype=np.int64), np.asarray(b_side, dtype=np.int64))
        return b.build()

    def __len__(self) -> int:
        return len(self.a_ptr) - 1

    def __getitem__(self, t: int) -> Biclique:
        return Biclique(self.a_idx[self.a_ptr[t]:self.a_ptr[t + 1]], self.b_idx[self.b_ptr[t]:self.b_ptr[t + 1]])

    def __iter__(self) -> Iterator[Biclique]:
        for t in range(len(self)):
            yield self[t]

    @property
    def a_sizes(self) -> np.ndarray:
        return np.diff(self.a_ptr)

    @property
    def b_sizes(self) -> np.ndarray:
        return np.diff(self.b_ptr)

    @property
    def pair_sizes(self) -> np.ndarray:
        return self.a_sizes * self.b_sizes

    @property
    def edge_count(self) -> int:
        return int(np.sum(self.pair_sizes))

    def pairs(self, select: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Materialize all ordered pairs (optionally of bicliques ``select`` only)."""
        ts = np.arange(len(self)) if select is None else np.asarray(select, dtype=np.int64)
        sa = self.a_sizes[ts]
        sb = self.b_sizes[ts]
        cnt = sa * sb
        total = int(cnt.sum())
        if total == 0:
            return _EMPTY, _EMPTY
        t_of = np.repeat(np.arange(len(ts)), cnt)
        start = np.concatenate([[0], np.cumsum(cnt)[:-1]])
        local = np.arange(total, dtype=np.int64) - start[t_of]
        nb = sb[t_of]
        ai = self.a_idx[self.a_ptr[ts][t_of] + local // nb]
        bi = self.b_idx[self.b_ptr[ts][t_of] + local % nb]
        return ai, bi

    def sample_pairs(self, size: int, rng) -> Tuple[np.ndarray, np.ndarray]:
        """``size`` ordered pairs drawn uniformly (with replacement) from all recorded pairs."""
        w = self.pair_sizes.astype(np.float64)
        tot = w.sum()
        if tot == 0:
            raise EmptyCollection("no pairs recorded in this collection")
        t = rng.choice(len(w), size=size, p=w / tot)
        ia = (rng.random(size) * self.a_sizes[t]).astype(np.int64)
        ib = (rng.random(size) * self.b_sizes[t]).astype(np.int64)
        return self.a_idx[self.a_ptr[t] + ia], self.b_idx[self.b_ptr[t] + ib]

    def sides_sorted(self) -> bool:
        for bc in self:
            if np.any(np.diff(bc.a_side) < 0) or np.any(np.diff(bc.b_side) < 0):
                return False
        return True

    @classmethod
    def concat(cls, role: str, covers) -> "CliqueCover":
        b = CoverBuilder(role)
        for c in covers:
            b.add_cover(c)
        return b.build()


class CoverBuilder:
    def __init__(self, role: str):
        self.role = role
        self._a: List[np.ndarray] = []
        self._b: List[np.ndarray] = []
        self._sa: List[np.ndarray] = []
        self._sb: List[np.ndarray] = []
        self.sum_a = 0
        self.sum_b = 0

    def add(self, a: np.ndarray, b: np.ndarray) -> None:
        if len(a) == 0 or len(b) == 0:
            return
        self._a.append(a)
        self._b.append(b)
        self._sa.append(np.array([len(a)]))
        self._sb.append(np.array([len(b)]))
        self.sum_a += len(a)
        self.sum_b += len(b)

    def add_singletons(self, a: np.ndarray, b: np.ndarray) -> None:
        if len(a) == 0:
            return
        self._a.append(a)
        self._b.append(b)
        one = np.ones(len(a), dtype=np.int64)
        self._sa.append(one)
        self._sb.append(one)
        self.sum_a += len(a)
        self.sum_b += len(a)

    def add_cover(self, c: CliqueCover) -> None:
        if len(c) == 0:
            return
        self._a.append(c.a_idx)
        self._b.append(c.b_idx)
        self._sa.append(c.a_sizes)
        self._sb.append(c.b_sizes)
        self.sum_a += int(c.a_sizes.sum())
        self.sum_b += int(c.b_sizes.sum())

    def build(self) -> CliqueCover:
        if not self._a:
            return CliqueCover(self.role)
        sa = np.concatenate(self._sa).astype(np.int64)
        sb = np.concatenate(self._sb).astype(np.int64)
        return CliqueCover(
            self.role,
            np.concatenate(self._a).astype(np.int64),
            np.concatenate([[0], np.cumsum(sa)]).astype(np.int64),
            np.concatenate(self._b).astype(np.int64),
            np.concatenate([[0], np.cumsum(sb)]).astype(np.int64),
        )


@dataclass
class BrsOutput:
    gamma: CliqueCover
    pi: CliqueCover

    @property
    def stats(self) -> dict:
        return {
            "n_gamma": len(self.gamma),
            "n_pi": len(self.pi),
            "gamma_sum_a": int(self.gamma.a_sizes.sum()),
            "gamma_sum_b": int(self.gamma.b_sizes.sum()),
            "gamma_edges": self.gamma.edge_count,
            "pi_pairs": self.pi.edge_count,
        }


def count_gamma_edges(out: BrsOutput) -> int:
    return out.gamma.edge_count


def sample_uncertain_pair(out: BrsOutput, rng) -> Tuple[int, int]:
    a, b = out.pi.sample_pairs(1, make_rng(rng))
    return int(a[0]), int(b[0])


# ------------------------------------------------------------------ rounds


def _ids(ids, n) -> np.ndarray:
    if ids is None:
        return np.arange(n, dtype=np.int64)
    return np.asarray(ids, dtype=np.int64)


def _chunks(ids: np.ndarray, size: int) -> List[np.ndarray]:
    if len(ids) <= size:
        return [ids]
    q = len(ids) // size
    out = [ids[i * size:(i + 1) * size] for i in range(q - 1)]
    out.append(ids[(q - 1) * size:])
    return out


def _clamp_r(r: float, m: int, n: int) -> float:
    return float(min(max(r, 1.0), max(1, min(m, n))))


def _round(centers: PointSet, c_ids, points: PointSet, p_ids, interval, r, rng, centers_are_a, gamma, rho):
    """One cutting round with annuli around ``centers[c_ids]``.

    Certified bicliques go to ``gamma`` (oriented A-side first); returns
    the unsolved subproblems as ``(center ids, point ids)`` pairs.
    """
    circles = CircleSet.for_annuli(centers, c_ids, interval)
    cut = build_hierarchical_cutting(circles, r, rho, rng)
    locate_points(cut, points, p_ids)
    compute_contained_annuli(cut)
    for cell in cut.cells:
        if len(cell.contained_a) and len(cell.canonical_b):
            cs = c_ids[cell.contained_a]
            if centers_are_a:
                gamma.add(cs, cell.canonical_b)
            else:
                gamma.add(cell.canonical_b, cs)
    size = max(1, math.ceil(len(p_ids) / (r * r)))
    subs = []
    for cid in cut.last_level:
        pts = cut.cells[cid].canonical_b
        if len(pts) == 0:
            continue
        owners = conflict_owners(cut, cid)
        if len(owners) == 0:
            continue
        cs = c_ids[owners]
        for chunk in _chunks(pts, size):
            subs.append((cs, chunk))
    return subs


def _partial(A, a_ids, B, b_ids, interval, r, rng, gamma: "CoverBuilder", pi: "CoverBuilder", rho):
    subs = _round(A, a_ids, B, b_ids, interval, r, rng, True, gamma, rho)
    for sa, sb in subs:
        if len(sa) * len(sb) <= SCAN_CUTOFF:
            # a dual cutting costs far more than scanning this few pairs
            _brute(A, sa, B, sb, interval, gamma)
            continue
        for sb2, sa2 in _round(B, sb, A, sa, interval, r, rng, False, gamma, rho):
            pi.add(sa2, sb2)


def partial_brs(A, B, interval: SqInterval, r: float, rng=None, preserve_order: bool = True,
                a_ids=None, b_ids=None, rho: float = DEFAULT_RHO) -> BrsOutput:
    """Partial batched range searching with parameter ``r``.

    A primal round (annuli around ``A``) is followed by a dual round
    (annuli around ``B``) on every unsolved subproblem; what the dual round
    leaves unsolved is reported in ``pi``.
    """
    A = as_point_set(A)
    B = as_point_set(B)
    rng = make_rng(rng)
    a_ids = _ids(a_ids, len(A))
    b_ids = _ids(b_ids, len(B))
    gamma, pi = CoverBuilder("gamma"), CoverBuilder("pi")
    if not interval.is_empty and len(a_ids) and len(b_ids):
        r = _clamp_r(r, len(a_ids), len(b_ids))
        _partial(A, a_ids, B, b_ids, interval, r, rng, gamma, pi, rho)
    return BrsOutput(gamma.build(), pi.build())


def _two_round(A, a_ids, B, b_ids, interval, rng, n_ref, gamma, pi, rho):
    r1_raw = n_ref ** (1 / 3) / log2g(n_ref)
    r2_raw = log2g(n_ref) / log2g(log2g(n_ref))
    if r1_raw <= r2_raw:
        # below astronomically large n the coarse round is the finer one;
        # it would only split the instance into overlapping copies
        r2 = _clamp_r(r2_raw, len(a_ids), len(b_ids))
        _partial(A, a_ids, B, b_ids, interval, r2, rng, gamma, pi, rho)
        return
    r1 = _clamp_r(r1_raw, len(a_ids), len(b_ids))
    first_pi = CoverBuilder("pi")
    _partial(A, a_ids, B, b_ids, interval, r1, rng, gamma, first_pi, rho)
    for bc in first_pi.build():
        r2 = _clamp_r(r2_raw, len(bc.a_side), len(bc.b_side))
        _partial(A, bc.a_side, B, bc.b_side, interval, r2, rng, gamma, pi, rho)


def partial_brs_selfjoin(P, interval: SqInterval, rng=None, rho: float = DEFAULT_RHO) -> BrsOutput:
    """Two-round partial BRS of ``P`` against itself.

    Round one uses ``r = n^(1/3) / log n``; every uncertain biclique it
    leaves is processed again with ``r = log n / log log n``.  While the
    first value is the smaller one (any realistic ``n``), only the second
    round runs.  Pairs are
    ordered, so an in-range unordered pair is covered twice, once per
    orientation.
    """
    P = as_point_set(P)
    if len(P) < 2:
        raise ValueError("self-join needs at least two points")
    rng = make_rng(rng)
    gamma, pi = CoverBuilder("gamma"), CoverBuilder("pi")
    if not interval.is_empty:
        ids = np.arange(len(P), dtype=np.int64)
        _two_round(P, ids, P, ids, interval, rng, len(P), gamma, pi, rho)
    return BrsOutput(gamma.build(), pi.build())


def partial_brs_bipartite(A, B, interval: SqInterval, rng=None, rho: float = DEFAULT_RHO) -> BrsOutput:
    """Stage-level partial BRS for two point sets of arbitrary sizes.

    Balanced sizes use the two-round composition.  Otherwise a primal
    round with annuli around the smaller set uses ``r = big / small``
    (or ``r = small`` when ``big >= small^2``, whose leftover subproblems
    are reported as uncertain directly); leftover balanced subproblems go
    through the two-round composition.
    """
    A = as_point_set(A)
    B = as_point_set(B)
    rng = make_rng(rng)
    gamma, pi = CoverBuilder("gamma"), CoverBuilder("pi")
    m, n = len(A), len(B)
    if interval.is_empty or m == 0 or n == 0:
        return BrsOutput(gamma.build(), pi.build())
    a_ids = np.arange(m, dtype=np.int64)
    b_ids = np.arange(n, dtype=np.int64)
    small, big = min(m, n), max(m, n)
    if big < 2 * small:
        _two_round(A, a_ids, B, b_ids, interval, rng, big, gamma, pi, rho)
        return BrsOutput(gamma.build(), pi.build())
    a_is_small = m <= n
    straight = big >= small * small
    r = float(small) if straight else big / small
    r = _clamp_r(r, m, n)
    if a_is_small:
        subs = _round(A, a_ids, B, b_ids, interval, r, rng, True, gamma, rho)
    else:
        subs = [(sa, sb) for sb, sa in _round(B, b_ids, A, a_ids, interval, r, rng, False, gamma, rho)]
    for sa, sb in subs:
        if straight:
            pi.add(sa, sb)
        else:
            _two_round(A, sa, B, sb, interval, rng, max(len(sa), len(sb), 2), gamma, pi, rho)
    return BrsOutput(gamma.build(), pi.build())


def brs_for_L(A, B, interval: SqInterval, L: float, rng=None, rho: float = DEFAULT_RHO) -> BrsOutput:
    """Partial BRS tuned so that ``pi`` records ``O((m+n)^(4/3) L^(2/3))`` pairs."""
    A = as_point_set(A)
    B = as_point_set(B)
    L = max(1.0, float(L))
    r = ((len(A) + len(B)) / L) ** (1 / 3)
    return partial_brs(A, B, interval, r, rng, rho=rho)


# ------------------------------------------------------------- complete


def _brute(A, a_ids, B, b_ids, interval, gamma: CoverBuilder):
    """Direct scan of a small subproblem.

    Rows of A with the same in-range pattern share one biclique, so an
    all-in-range block costs one biclique rather than ``|a|*|b|``.
    """
    d = A.sq_dists(np.repeat(a_ids, len(b_ids)), B, np.tile(b_ids, len(a_ids)))
    hit = interval.mask(d).reshape(len(a_ids), len(b_ids))
    rows = np.flatnonzero(hit.any(axis=1))
    if len(rows) == 0:
        return
    pats, inv = np.unique(hit[rows], axis=0, return_inverse=True)
    inv = inv.ravel()
    for g, pat in enumerate(pats):
        gamma.add(a_ids[rows[inv == g]], b_ids[pat])


def complete_brs(A, B, interval: SqInterval, rng=None, preserve_order: bool = True,
                 cutoff: int = BRUTE_CUTOFF, rho: float = DEFAULT_RHO) -> CliqueCover:
    """Batched range searching with no uncertain pairs.

    The cutting rounds are applied recursively until subproblems have at
    most ``cutoff`` pairs, which are scanned directly.  Parameters follow
    the size regime of each subproblem (``m <= n`` shown; symmetric
    otherwise):

    * ``n >= m^2``: one primal round with ``r = m``;
    * ``2m <= n < m^2``: one primal round with ``r = n / m``;
    * ``n < 2m``: a primal and a dual round with ``r = n^(1/3) / log n``.

    ``r`` is never below 2 so that every subproblem is strictly smaller.
    Bicliques come out with both sides sorted by id.
    """
    A = as_point_set(A)
    B = as_point_set(B)
    rng = make_rng(rng)
    gamma = CoverBuilder("gamma")
    if interval.is_empty or len(A) == 0 or len(B) == 0:
        return gamma.build()
    stack = [(np.arange(len(A), dtype=np.int64), np.arange(len(B), dtype=np.int64))]
    while stack:
        a_ids, b_ids = stack.pop()
        m, n = len(a_ids), len(b_ids)
        if m * n <= cutoff:
            _brute(A, a_ids, B, b_ids, interval, gamma)
            continue
        small, big = min(m, n), max(m, n)
        if big >= 2 * small:
            r = float(small) if big >= small * small else big / small
            r = min(max(r, 2.0), small) if small >= 2 else 1.0
            if small == 1:
                _brute(A, a_ids, B, b_ids, interval, gamma)
                continue
            if m <= n:
                subs = _round(A, a_ids, B, b_ids, interval, r, rng, True, gamma, rho)
            else:
                subs = [(sa, sb) for sb, sa in _round(B, b_ids, A, a_ids, interval, r, rng, False, gamma, rho)]
        else:
            r = min(max(big ** (1 / 3) / log2g(big), 2.0), small)
            pi = CoverBuilder("pi")
            _partial(A, a_ids, B, b_ids, interval, r, rng, gamma, pi, rho)
            subs = [(bc.a_side, bc.b_side) for bc in pi.build()]
        for sa, sb in subs:
            if len(sa) * len(sb) >= m * n:
                _brute(A, sa, B, sb, interval, gamma)
            else:
                stack.append((sa, sb))
    return gamma.build()
