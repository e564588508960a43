"""Hierarchical cuttings for the boundary circles of a family of annuli.

A cell is a pseudo-trapezoid: the part of the vertical slab
``x_lo <= x < x_hi`` strictly above a bottom arc and at or below a top
arc (either may be absent, meaning unbounded).  Arcs are the upper
(``+1``) or lower (``-1``) half of a boundary circle.

Exactness tactics
-----------------
* Whether a point lies above or below an arc is decided from the squared
  distance between the point and the arc's center (see :func:`cell_mask`),
  never from a square root.  A point exactly on a circle goes to the
  closed-disk side of that circle, which is the side annulus membership
  ``lo < d^2 <= hi`` puts it on, so point location and annulus
  membership can never disagree on a boundary.
* Whether a circle crosses a cell interior is decided with a small
  tolerance that errs towards "crosses".  A false positive only costs
  efficiency (the pair becomes uncertain); a false negative could
  certify a wrong pair.
* An annulus with ``lo == 0`` is a punctured disk.  Its puncture (the
  center) is kept as a zero-radius boundary object so that a cell
  containing the center is never certified as inside the annulus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import INF, ConstructionFailure, PointSet, SqInterval, make_rng, sq_dist_arrays

OUTER, INNER, PUNCTURE = 0, 1, 2
UPPER, LOWER = 1, -1

Arc = Tuple[int, int]  # (circle id, branch)

DEFAULT_RHO = 2.0
DEFAULT_SLACK = 4.0
DEFAULT_SAMPLE_FACTOR = 2.0
RETRY_BUDGET = 8


@dataclass(frozen=True)
class Annulus:
    """Points ``q`` with ``interval.lo < |center q|^2 <= interval.hi``."""

    center: Tuple[float, float]
    interval: SqInterval

    def contains_point(self, q) -> bool:
        dx = self.center[0] - q[0]
        dy = self.center[1] - q[1]
        return self.interval.contains(dx * dx + dy * dy)


@dataclass(frozen=True)
class BoundaryCircle:
    center: Tuple[float, float]
    sq_radius: float
    owner: int
    which: str  # "outer", "inner" or "puncture"


class CircleSet:
    """Struct-of-arrays storage for boundary circles.

    Circle ids are ordered by owner, so a sorted list of circle ids is
    also sorted by owning annulus (and therefore by center index).
    """

    def __init__(self, cx, cy, r2, owner, kind, n_owners: int):
        self.cx = np.asarray(cx, dtype=np.float64)
        self.cy = np.asarray(cy, dtype=np.float64)
        self.r2 = np.asarray(r2, dtype=np.float64)
        self.R = np.sqrt(self.r2)
        self.owner = np.asarray(owner, dtype=np.int64)
        self.kind = np.asarray(kind, dtype=np.int8)
        self.n_owners = n_owners
        # per-owner circle ids, -1 when absent
        self.outer_of = np.full(n_owners, -1, dtype=np.int64)
        self.inner_of = np.full(n_owners, -1, dtype=np.int64)
        ids = np.arange(len(self.cx))
        is_outer = self.kind == OUTER
        self.outer_of[self.owner[is_outer]] = ids[is_outer]
        self.inner_of[self.owner[~is_outer]] = ids[~is_outer]
        finite = np.concatenate([np.abs(self.cx), np.abs(self.cy), self.R, [1.0]])
        self.scale = float(np.max(finite))
        self.tol = 1e-9 * self.scale

    def __len__(self) -> int:
        return len(self.cx)

    @classmethod
    def for_annuli(cls, centers: PointSet, ids: np.ndarray, interval: SqInterval) -> "CircleSet":
        """Boundary objects of the annuli ``interval`` around ``centers[ids]``.

        Owner ``j`` is the annulus around ``centers[ids[j]]``.
        """
        ids = np.asarray(ids, dtype=np.int64)
        m = len(ids)
        has_outer = math.isfinite(interval.hi)
        per = int(has_outer) + 1
        cx = np.repeat(centers.x[ids], per)
        cy = np.repeat(centers.y[ids], per)
        owner = np.repeat(np.arange(m, dtype=np.int64), per)
        r2 = np.empty(m * per)
        kind = np.empty(m * per, dtype=np.int8)
        if has_outer:
            r2[0::2] = interval.hi
            kind[0::2] = OUTER
            r2[1::2] = interval.lo
            kind[1::2] = INNER if interval.lo > 0 else PUNCTURE
        else:
            r2[:] = interval.lo
            kind[:] = INNER if interval.lo > 0 else PUNCTURE
        return cls(cx, cy, r2, owner, kind, m)

    @classmethod
    def from_boundary_circles(cls, circles: Sequence[BoundaryCircle]) -> "CircleSet":
        kinds = {"outer": OUTER, "inner": INNER, "puncture": PUNCTURE}
        order = sorted(range(len(circles)), key=lambda i: (circles[i].owner, kinds[circles[i].which]))
        cs = [circles[i] for i in order]
        n_owners = 1 + max((c.owner for c in cs), default=-1)
        return cls(
            [c.center[0] for c in cs],
            [c.center[1] for c in cs],
            [c.sq_radius for c in cs],
            [c.owner for c in cs],
            [kinds[c.which] for c in cs],
            n_owners,
        )

    def boundary_circle(self, cid: int) -> BoundaryCircle:
        which = ("outer", "inner", "puncture")[int(self.kind[cid])]
        return BoundaryCircle((float(self.cx[cid]), float(self.cy[cid])), float(self.r2[cid]), int(self.owner[cid]), which)

    def arc_y(self, arc: Optional[Arc], x, default: float):
        """y-coordinate of ``arc`` at ``x``; ``default`` (+-inf) for a missing arc."""
        if arc is None:
            return np.full(np.shape(x), default) if np.ndim(x) else default
        cid, br = arc
        dx = x - self.cx[cid]
        return self.cy[cid] + br * np.sqrt(np.maximum(self.r2[cid] - dx * dx, 0.0))

    def pair_x(self, i, j) -> np.ndarray:
        """x-coordinates of the intersection points of circles ``i`` and ``j``.

        Vectorized over broadcastable id arrays; returns shape ``(..., 2)``
        with NaN where an intersection point does not exist.  The result is
        symmetric in ``i`` and ``j`` bit for bit (ids are put in order
        first), so walls and conflict tests see identical coordinates.
        """
        i = np.asarray(i)
        j = np.asarray(j)
        a = np.minimum(i, j)
        b = np.maximum(i, j)
        x1, y1, q1 = self.cx[a], self.cy[a], self.r2[a]
        x2, y2, q2 = self.cx[b], self.cy[b], self.r2[b]
        dx = x2 - x1
        dy = y2 - y1
        d2 = dx * dx + dy * dy
        ok = (d2 > 0) & (q1 > 0) & (q2 > 0)
        d2s = np.where(ok, d2, 1.0)
        t = (q1 - q2 + d2s) / (2.0 * d2s)  # fraction of the center offset to the chord
        h2 = q1 / d2s - t * t  # squared half-chord over d^2
        # near-tangent pairs count as touching, so tangencies yield a breakpoint
        ok &= h2 >= -1e-12
        h = np.sqrt(np.where(ok, np.maximum(h2, 0.0), 0.0))
        xa = x1 + t * dx - h * dy
        xb = x1 + t * dx + h * dy
        out = np.stack([xa, xb], axis=-1)
        out[~ok] = np.nan
        return out


@dataclass(frozen=True)
class PseudoTrapezoid:
    x_lo: float
    x_hi: float
    bottom: Optional[Arc]
    top: Optional[Arc]


@dataclass
class CuttingCell:
    shape: PseudoTrapezoid
    level: int
    parent: Optional[int]
    children: List[int] = field(default_factory=list)
    conflict: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    canonical_b: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    contained_a: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


@dataclass
class HierarchicalCutting:
    circles: CircleSet
    cells: List[CuttingCell]
    levels: List[List[int]]
    rho: float
    r: float
    slack: float
    resamples: int = 0
    location_repairs: int = 0

    @property
    def k(self) -> int:
        return len(self.levels) - 1

    @property
    def last_level(self) -> List[int]:
        return self.levels[-1]

    def total_conflict(self) -> int:
        return int(sum(len(c.conflict) for c in self.cells))


ROOT_SHAPE = PseudoTrapezoid(-INF, INF, None, None)


def n_levels(r: float, rho: float) -> int:
    """Number of refinement levels: ``log_rho r`` rounded to the nearest integer.

    One refinement already cuts conflict lists by a good deal more than
    ``rho`` in practice, so rounding up would build a full level for
    ``r`` barely above 1.
    """
    if r <= 1:
        return 0
    return max(0, int(math.floor(math.log(r) / math.log(rho) + 0.5)))


# ---------------------------------------------------------------- geometry


_REP_FRACTIONS = np.array([0.5, 0.25, 0.75, 0.125, 0.875, 0.375, 0.625, 0.03, 0.97])


def representative_point(circles: CircleSet, shape: PseudoTrapezoid) -> Tuple[float, float]:
    """A point well inside ``shape``.

    Among a few abscissas the one where the cell is tallest is used, so
    a cell pinched where two of its arcs touch still gets an interior
    point.
    """
    lo, hi = shape.x_lo, shape.x_hi
    if math.isinf(lo) and math.isinf(hi):
        xs = np.array([0.0])
    elif math.isinf(lo):
        xs = np.array([hi - max(1.0, abs(hi))])
    elif math.isinf(hi):
        xs = np.array([lo + max(1.0, abs(lo))])
    else:
        xs = lo + _REP_FRACTIONS * (hi - lo)
    yb = np.asarray(circles.arc_y(shape.bottom, xs, -INF), dtype=np.float64)
    yt = np.asarray(circles.arc_y(shape.top, xs, INF), dtype=np.float64)
    i = int(np.argmax(yt - yb))
    x, yb, yt = float(xs[i]), float(yb[i]), float(yt[i])
    if math.isinf(yb) and math.isinf(yt):
        y = 0.0
    elif math.isinf(yb):
        y = yt - max(1.0, abs(yt))
    elif math.isinf(yt):
        y = yb + max(1.0, abs(yb))
    else:
        y = 0.5 * (yb + yt)
    return x, y


def _arc_side(circles: CircleSet, arc: Arc, px, py, want_above: bool):
    cid, br = arc
    cx, cy, r2 = circles.cx[cid], circles.cy[cid], circles.r2[cid]
    s = sq_dist_arrays(px, py, cx, cy)
    if br == UPPER:
        below = (py < cy) | (s <= r2)
    else:
        below = (py <= cy) & (s > r2)
    return ~below if want_above else below


def cell_mask(circles: CircleSet, shape: PseudoTrapezoid, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Boolean mask of points lying in ``shape`` under the boundary-tie rule.

    Vertical walls belong to the cell on their right; a point on an arc
    belongs to the closed-disk side of the arc's circle.
    """
    m = (px >= shape.x_lo) & (px < shape.x_hi)
    if shape.bottom is not None:
        m &= _arc_side(circles, shape.bottom, px, py, True)
    if shape.top is not None:
        m &= _arc_side(circles, shape.top, px, py, False)
    return m


def _arcs_y(circles: CircleSet, cid: np.ndarray, br: np.ndarray, x, default: float):
    """Vectorized arc evaluation; ``cid < 0`` marks a missing arc (value ``default``)."""
    c = np.maximum(cid, 0)
    dx = x - circles.cx[c]
    y = circles.cy[c] + br * np.sqrt(np.maximum(circles.r2[c] - dx * dx, 0.0))
    return np.where(cid >= 0, y, default)


def _shape_arrays(shapes: Sequence[PseudoTrapezoid]):
    xl = np.array([s.x_lo for s in shapes], dtype=np.float64)
    xh = np.array([s.x_hi for s in shapes], dtype=np.float64)
    bc = np.array([-1 if s.bottom is None else s.bottom[0] for s in shapes], dtype=np.int64)
    bb = np.array([0 if s.bottom is None else s.bottom[1] for s in shapes], dtype=np.int64)
    tc = np.array([-1 if s.top is None else s.top[0] for s in shapes], dtype=np.int64)
    tb = np.array([0 if s.top is None else s.top[1] for s in shapes], dtype=np.int64)
    return xl, xh, bc, bb, tc, tb


def _cell_y_bounds(circles: CircleSet, xl, xh, bc, bb, tc, tb):
    """Lower and upper bounds of the y-extent of each cell.

    An upper branch is lowest at an end of the x-range and highest at the
    circle's center abscissa (clipped to the range); a lower branch the
    other way round.
    """
    def extremes(cid, br):
        c = np.maximum(cid, 0)
        lo_x = np.clip(xl, circles.cx[c] - circles.R[c], circles.cx[c] + circles.R[c])
        hi_x = np.clip(xh, circles.cx[c] - circles.R[c], circles.cx[c] + circles.R[c])
        mid_x = np.clip(circles.cx[c], lo_x, hi_x)
        ends = np.stack([_arcs_y(circles, cid, br, lo_x, 0.0), _arcs_y(circles, cid, br, hi_x, 0.0)])
        mid = _arcs_y(circles, cid, br, mid_x, 0.0)
        low = np.where(br > 0, ends.min(axis=0), mid)
        high = np.where(br > 0, mid, ends.max(axis=0))
        return low, high

    y_lo, _ = extremes(bc, bb)
    _, y_hi = extremes(tc, tb)
    return np.where(bc >= 0, y_lo, -INF), np.where(tc >= 0, y_hi, INF)


def conflict_matrix(circles: CircleSet, ids: np.ndarray, shapes: Sequence[PseudoTrapezoid]) -> np.ndarray:
    """``out[k, i]``: can object ``ids[i]`` change annulus membership inside ``shapes[k]``?

    An object conflicts with a cell when it comes within ``circles.tol``
    of the cell's closure, so tangencies and contacts at walls or corners
    count.  The circles carrying the cell's own arcs (and exact copies of
    them) are the exception: the bounding branch never conflicts, and
    the other branch only when it enters the open cell, since the
    closed-disk tie rule already puts their boundary points on the
    cell's side.

    A circle is tested by cutting its x-overlap with the cell at every
    abscissa where it meets the cell's bottom or top circle; on each
    piece its vertical order with respect to both arcs is constant, so
    the piece ends and midpoints decide.
    """
    ids = np.asarray(ids, dtype=np.int64)
    K, N = len(shapes), len(ids)
    out = np.zeros((K, N), dtype=bool)
    if K == 0 or N == 0:
        return out
    tol = circles.tol
    xl, xh, bc, bb, tc, tb = _shape_arrays(shapes)
    cx, cy, r2, R = circles.cx[ids], circles.cy[ids], circles.r2[ids], circles.R[ids]

    pun = np.flatnonzero(r2 == 0)
    if len(pun):
        live = (cx[pun][None, :] >= xl[:, None] - tol) & (cx[pun][None, :] <= xh[:, None] + tol)
        kk, jj = np.nonzero(live)
        nn = pun[jj]
        qx, qy = cx[nn], cy[nn]
        yb = _arcs_y(circles, bc[kk], bb[kk], qx, -INF)
        yt = _arcs_y(circles, tc[kk], tb[kk], qx, INF)
        out[kk, nn] = (qy >= yb - tol) & (qy <= yt + tol)

    circ = np.flatnonzero(r2 > 0)
    if len(circ) == 0:
        return out
    u = np.maximum(xl[:, None], (cx[circ] - R[circ])[None, :])
    v = np.minimum(xh[:, None], (cx[circ] + R[circ])[None, :])
    y_lo, y_hi = _cell_y_bounds(circles, xl, xh, bc, bb, tc, tb)
    near = u <= v + tol
    near &= (cy[circ] + R[circ])[None, :] >= y_lo[:, None] - tol
    near &= (cy[circ] - R[circ])[None, :] <= y_hi[:, None] + tol
    kk, jj = np.nonzero(near)
    if len(kk) == 0:
        return out
    u, v = u[kk, jj], v[kk, jj]
    v = np.maximum(u, v)
    nn = circ[jj]
    cid = ids[nn]
    cols = [u, v]
    for arc_c in (bc[kk], tc[kk]):
        xs = circles.pair_x(cid, np.maximum(arc_c, 0))
        for c in range(2):
            col = xs[:, c]
            bad = np.isnan(col) | (arc_c < 0)
            cols.append(np.where(bad, u, np.clip(col, u, v)))
    bp = np.sort(np.stack(cols, axis=1), axis=1)
    mids = 0.5 * (bp[:, 1:] + bp[:, :-1])
    wide = bp[:, 1:] > bp[:, :-1]
    xs_all = np.concatenate([bp, mids], axis=1)
    ccx, ccy, cr2 = cx[nn], cy[nn], r2[nn]

    def side_test(xs):
        yb = _arcs_y(circles, bc[kk][:, None], bb[kk][:, None], xs, -INF)
        yt = _arcs_y(circles, tc[kk][:, None], tb[kk][:, None], xs, INF)
        dx = xs - ccx[:, None]
        half = np.sqrt(np.maximum(cr2[:, None] - dx * dx, 0.0))
        return yb, yt, half

    yb_c, yt_c, half_c = side_test(xs_all)
    yb_o, yt_o, half_o = side_test(mids)
    same = []
    for arc_c, arc_b in ((bc[kk], bb[kk]), (tc[kk], tb[kk])):
        a = np.maximum(arc_c, 0)
        eq = (arc_c >= 0) & (ccx == circles.cx[a]) & (ccy == circles.cy[a]) & (cr2 == circles.r2[a])
        same.append((eq, arc_b))
    own = same[0][0] | same[1][0]
    hit = np.zeros(len(kk), dtype=bool)
    for br in (UPPER, LOWER):
        y = ccy[:, None] + br * half_c
        closed = ((y >= yb_c - tol) & (y <= yt_c + tol)).any(axis=1)
        y = ccy[:, None] + br * half_o
        opened = (wide & (y > yb_o - tol) & (y < yt_o + tol)).any(axis=1)
        ins = np.where(own, opened, closed)
        for eq, arc_b in same:
            ins &= ~(eq & (arc_b == br))
        hit |= ins
    out[kk, nn] = hit
    return out


def conflict_mask(circles: CircleSet, ids: np.ndarray, shape: PseudoTrapezoid) -> np.ndarray:
    """Which of the boundary objects ``ids`` meet the relative interior of ``shape``."""
    return conflict_matrix(circles, ids, [shape])[0]


# ---------------------------------------------------------- decomposition


def _slab_mid(lo: float, hi: float) -> float:
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - max(1.0, abs(hi))
    if math.isinf(hi):
        return lo + max(1.0, abs(lo))
    return 0.5 * (lo + hi)


def decompose(circles: CircleSet, shape: PseudoTrapezoid, sample: np.ndarray) -> List[PseudoTrapezoid]:
    """Vertical decomposition of the sampled arcs (and punctures) inside ``shape``.

    Built as the slab decomposition at all event abscissae, followed by
    merging horizontally adjacent slab pieces bounded by the same two arcs
    whenever no wall needs to separate them.
    """
    sample = np.unique(np.asarray(sample, dtype=np.int64))
    arcs_c = sample[circles.r2[sample] > 0]
    puncts = sample[circles.r2[sample] == 0]
    x_lo, x_hi = shape.x_lo, shape.x_hi

    ev = [circles.cx[arcs_c] - circles.R[arcs_c], circles.cx[arcs_c] + circles.R[arcs_c], circles.cx[puncts]]
    if len(arcs_c) > 1:
        ii, jj = np.triu_indices(len(arcs_c), 1)
        ev.append(circles.pair_x(arcs_c[ii], arcs_c[jj]).ravel())
    for arc in (shape.bottom, shape.top):
        if arc is not None and len(arcs_c):
            ev.append(circles.pair_x(arcs_c, arc[0]).ravel())
    ev = np.concatenate(ev) if ev else np.empty(0)
    ev = ev[~np.isnan(ev)]
    ev = np.unique(ev[(ev > x_lo) & (ev < x_hi)])
    breaks = np.concatenate([[x_lo], ev, [x_hi]])
    n_slabs = len(breaks) - 1

    mids = np.array([_slab_mid(breaks[s], breaks[s + 1]) for s in range(n_slabs)])
    # arcs of sampled circles at every slab midpoint: rows = slabs
    if len(arcs_c):
        dx = mids[:, None] - circles.cx[arcs_c][None, :]
        inside = dx * dx < circles.r2[arcs_c][None, :]
        half = np.sqrt(np.maximum(circles.r2[arcs_c][None, :] - dx * dx, 0.0))
        yu = circles.cy[arcs_c][None, :] + half
        yl = circles.cy[arcs_c][None, :] - half
        yb = circles.arc_y(shape.bottom, mids, -INF)[:, None]
        yt = circles.arc_y(shape.top, mids, INF)[:, None]
        ok_u = inside & (yu > yb) & (yu < yt)
        ok_l = inside & (yl > yb) & (yl < yt)
    slab_pairs: List[List[Tuple[Optional[Arc], Optional[Arc]]]] = []
    for s in range(n_slabs):
        stack: List[Tuple[float, int, int]] = []
        if len(arcs_c):
            for c in np.flatnonzero(ok_u[s]):
                stack.append((yu[s, c], int(arcs_c[c]), UPPER))
            for c in np.flatnonzero(ok_l[s]):
                stack.append((yl[s, c], int(arcs_c[c]), LOWER))
            stack.sort()
        seq: List[Optional[Arc]] = [shape.bottom] + [(c, b) for _, c, b in stack] + [shape.top]
        slab_pairs.append([(seq[q], seq[q + 1]) for q in range(len(seq) - 1)])

    pq = puncts
    out: List[PseudoTrapezoid] = []
    open_: dict = {}
    for s in range(n_slabs):
        cur = slab_pairs[s]
        if s == 0:
            for p in cur:
                open_[p] = breaks[0]
            continue
        e = breaks[s]
        blocked = set()
        if len(pq):
            at = pq[circles.cx[pq] == e]
            for q in at:
                qy = circles.cy[q]
                for p in cur:
                    lo_y = circles.arc_y(p[0], e, -INF)
                    hi_y = circles.arc_y(p[1], e, INF)
                    if lo_y <= qy <= hi_y:
                        blocked.add(p)
        cur_set = set(cur)
        nxt = {}
        for p, start in open_.items():
            if p in cur_set and p not in blocked:
                nxt[p] = start
            else:
                out.append(PseudoTrapezoid(start, e, p[0], p[1]))
        for p in cur:
            if p not in nxt:
                nxt[p] = e
        open_ = nxt
    for p, start in open_.items():
        out.append(PseudoTrapezoid(start, breaks[-1], p[0], p[1]))
    out.sort(key=lambda t: (t.x_lo, _sort_y(circles, t)))
    return out


def _sort_y(circles: CircleSet, t: PseudoTrapezoid) -> float:
    x = _slab_mid(t.x_lo, t.x_hi)
    y = circles.arc_y(t.bottom, x, -INF)
    return float(y)


# ------------------------------------------------------------ construction


def build_hierarchical_cutting(
    circles,
    r: float,
    rho: float = DEFAULT_RHO,
    rng=None,
    slack: float = DEFAULT_SLACK,
    sample_factor: float = DEFAULT_SAMPLE_FACTOR,
) -> HierarchicalCutting:
    """Hierarchical (1/r)-cutting with about ``log_rho r`` refinement levels (see :func:`n_levels`).

    ``circles`` is a :class:`CircleSet` or a sequence of
    :class:`BoundaryCircle`.  Every cell with a nonempty conflict list is
    refined by the vertical decomposition of a random sample of
    ``sample_factor * rho`` of its conflicting objects; a child whose
    conflict list exceeds ``slack * |C| / rho**level`` is decomposed again
    with a doubled sample, at most ``RETRY_BUDGET`` times.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if rho <= 1:
        raise ValueError("rho must be > 1")
    if not isinstance(circles, CircleSet):
        circles = CircleSet.from_boundary_circles(list(circles))
    rng = make_rng(rng)
    n_obj = len(circles)
    root = CuttingCell(ROOT_SHAPE, 0, None, conflict=np.arange(n_obj, dtype=np.int64))
    cells = [root]
    levels = [[0]]
    k = n_levels(r, rho)
    base = max(1, math.ceil(sample_factor * rho))
    cut = HierarchicalCutting(circles, cells, levels, rho, r, slack)
    for lvl in range(1, k + 1):
        bound = slack * n_obj / rho**lvl
        nxt: List[int] = []
        for pid in levels[lvl - 1]:
            parent = cells[pid]
            for shape, conf in _refine(circles, parent.shape, parent.conflict, base, bound, rng, cut):
                cid = len(cells)
                cells.append(CuttingCell(shape, lvl, pid, conflict=conf))
                parent.children.append(cid)
                nxt.append(cid)
        levels.append(nxt)
    return cut


def _refine(circles, shape, conflict, base, bound, rng, cut, depth=0):
    if len(conflict) == 0:
        return [(shape, conflict)]
    size = base * 2**depth
    if size >= len(conflict):
        sample = conflict
    else:
        sample = rng.choice(conflict, size=size, replace=False)
    pieces = decompose(circles, shape, sample)
    mat = conflict_matrix(circles, conflict, pieces)
    out = []
    for piece, row in zip(pieces, mat):
        conf = conflict[row]
        if len(conf) > bound and len(sample) < len(conflict):
            # an exhaustive sample already gives the finest decomposition;
            # whatever still conflicts is degenerate (touching) and is kept
            if depth >= RETRY_BUDGET:
                raise ConstructionFailure(
                    f"cell conflict {len(conf)} exceeds bound {bound:.1f} after {RETRY_BUDGET} resamples"
                )
            cut.resamples += 1
            out.extend(_refine(circles, piece, conf, base, bound, rng, cut, depth + 1))
        else:
            out.append((piece, conf))
    return out


# -------------------------------------------------------- point location


def locate_points(cutting: HierarchicalCutting, points: PointSet, ids=None, preserve_order: bool = True) -> None:
    """Fill ``canonical_b`` of every cell with the ids of the points inside it.

    Points are pushed top-down through the hierarchy; lists come out in
    increasing id order (``preserve_order`` is accepted for interface
    symmetry; the order is always preserved).
    """
    circles = cutting.circles
    cells = cutting.cells
    if ids is None:
        ids = np.arange(len(points), dtype=np.int64)
    else:
        ids = np.sort(np.asarray(ids, dtype=np.int64))
    cells[0].canonical_b = ids
    px_all, py_all = points.x, points.y
    for lvl in range(1, len(cutting.levels)):
        for pid in cutting.levels[lvl - 1]:
            parent = cells[pid]
            pts = parent.canonical_b
            kids = parent.children
            if len(kids) == 1:
                cells[kids[0]].canonical_b = pts
                continue
            if len(pts) == 0:
                for c in kids:
                    cells[c].canonical_b = pts
                continue
            px, py = px_all[pts], py_all[pts]
            masks = np.stack([cell_mask(circles, cells[c].shape, px, py) for c in kids])
            hits = masks.sum(axis=0)
            choice = np.argmax(masks, axis=0)
            bad = np.flatnonzero(hits != 1)
            for b in bad:
                choice[b] = _repair_location(circles, [cells[c].shape for c in kids], px[b], py[b])
                cutting.location_repairs += 1
            for j, c in enumerate(kids):
                cells[c].canonical_b = pts[choice == j]


def _repair_location(circles, shapes, x, y) -> int:
    col = [j for j, s in enumerate(shapes) if s.x_lo <= x < s.x_hi]
    if not col:
        col = list(range(len(shapes)))
    col.sort(key=lambda j: circles.arc_y(shapes[j].bottom, x, -INF))
    for j in col:
        s = shapes[j]
        if s.top is None or _arc_side(circles, s.top, np.array([x]), np.array([y]), False)[0]:
            return j
    return col[-1]


# ----------------------------------------------------- contained annuli


def _inside_matrix(circles: CircleSet, cid: np.ndarray, shapes, reps: np.ndarray) -> np.ndarray:
    """``[k, i]``: is cell ``k`` on the closed-disk side of circle ``cid[i]``?

    Only meaningful when the circle does not cross the cell.  A circle
    bounding the cell is decided by which of its arcs the cell touches;
    any other circle by the cell's representative point.
    """
    s = sq_dist_arrays(reps[:, 0:1], reps[:, 1:2], circles.cx[cid][None, :], circles.cy[cid][None, :])
    inside = s <= circles.r2[cid][None, :]
    _, _, bc, bb, tc, tb = _shape_arrays(shapes)
    inside = np.where(cid[None, :] == tc[:, None], (tb == UPPER)[:, None], inside)
    inside = np.where(cid[None, :] == bc[:, None], (bb == LOWER)[:, None], inside)
    return inside


def _in_sorted(sorted_arr: np.ndarray, vals: np.ndarray) -> np.ndarray:
    if len(sorted_arr) == 0:
        return np.zeros(np.shape(vals), dtype=bool)
    pos = np.searchsorted(sorted_arr, vals)
    pos = np.minimum(pos, len(sorted_arr) - 1)
    return sorted_arr[pos] == vals


def annuli_contain_cells(circles: CircleSet, owners: np.ndarray, cells: Sequence[CuttingCell]) -> np.ndarray:
    """``[k, i]``: does annulus ``owners[i]`` contain all of ``cells[k]``?

    Valid because an annulus none of whose boundary objects meets the
    cell interior has constant membership over the cell.
    """
    owners = np.asarray(owners, dtype=np.int64)
    shapes = [c.shape for c in cells]
    reps = np.array([representative_point(circles, sh) for sh in shapes], dtype=np.float64).reshape(-1, 2)
    ok = np.ones((len(cells), len(owners)), dtype=bool)
    outer = circles.outer_of[owners]
    inner = circles.inner_of[owners]
    has_o = np.flatnonzero(outer >= 0)
    if len(has_o):
        oc = outer[has_o]
        conf = np.stack([_in_sorted(c.conflict, oc) for c in cells])
        ok[:, has_o] &= ~conf & _inside_matrix(circles, oc, shapes, reps)
    has_i = np.flatnonzero(inner >= 0)
    if len(has_i):
        ic = inner[has_i]
        conf = np.stack([_in_sorted(c.conflict, ic) for c in cells])
        pun = (circles.r2[ic] == 0)[None, :]
        ok[:, has_i] &= ~conf & (pun | ~_inside_matrix(circles, ic, shapes, reps))
    return ok


def annulus_contains_cell(circles: CircleSet, owner: int, cell: CuttingCell) -> bool:
    """True iff annulus ``owner`` contains the whole cell."""
    return bool(annuli_contain_cells(circles, np.array([owner]), [cell])[0, 0])


def compute_contained_annuli(cutting: HierarchicalCutting) -> None:
    """Fill ``contained_a``: annuli containing a cell but not its parent.

    Only annuli with a boundary object in the parent's conflict list can
    qualify, so each parent's conflict owners are tested against its
    children.
    """
    circles = cutting.circles
    cells = cutting.cells
    for lvl in range(1, len(cutting.levels)):
        for pid in cutting.levels[lvl - 1]:
            parent = cells[pid]
            if len(parent.conflict) == 0:
                continue
            owners = np.unique(circles.owner[parent.conflict])
            kids = [cells[c] for c in parent.children]
            mat = annuli_contain_cells(circles, owners, kids)
            for cell, row in zip(kids, mat):
                cell.contained_a = owners[row]


def conflict_owners(cutting: HierarchicalCutting, cell_id: int) -> np.ndarray:
    """Annuli with a boundary object in the cell's conflict list (sorted)."""
    return np.unique(cutting.circles.owner[cutting.cells[cell_id].conflict])
