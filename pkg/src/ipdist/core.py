"""Geometric primitives shared by every algorithm in the package.

All distances are handled as squared values.  Two points are compared
through :func:`sq_dist`, which is the single place where a squared
distance is computed, so every module sees bit-identical values for the
same pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

INF = math.inf

SeedLike = Union[None, int, np.random.Generator]


class IpdistError(Exception):
    """Base class for errors raised by this package."""


class ConstructionFailure(IpdistError):
    """A randomized cutting construction exhausted its retry budget."""


class RankOutOfRange(IpdistError, ValueError):
    pass


class NoFeasibleValue(IpdistError):
    """The decision procedure rejects every candidate value."""


class EmptyCollection(IpdistError, ValueError):
    pass


class WeightBoundViolated(IpdistError, ValueError):
    pass


class FallbackToEnumeration(UserWarning):
    """Emitted when a stage loop hits its guard and switches to enumeration."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate in {self!r}")


def sq_dist(p, q) -> float:
    """Squared Euclidean distance between two points (anything with .x/.y or a pair)."""
    px, py = _xy(p)
    qx, qy = _xy(q)
    dx = px - qx
    dy = py - qy
    return dx * dx + dy * dy


def _xy(p):
    if isinstance(p, Point):
        return p.x, p.y
    return float(p[0]), float(p[1])


def sq_dist_arrays(ax, ay, bx, by):
    """Elementwise squared distances; same operation order as :func:`sq_dist`."""
    dx = ax - bx
    dy = ay - by
    return dx * dx + dy * dy


class PointSet:
    """Immutable planar point set; point ``i`` keeps id ``i`` forever.

    Coordinates live in a read-only ``(n, 2)`` float64 array.
    """

    def __init__(self, coords):
        arr = np.array(coords, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) array of coordinates, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")
        arr += 0.0  # -0.0 -> 0.0, so coordinate hashing sees one origin
        arr.setflags(write=False)
        self._coords = arr
        self.x = arr[:, 0]
        self.y = arr[:, 1]

    @classmethod
    def from_points(cls, points: Iterable) -> "PointSet":
        return cls([_xy(p) for p in points])

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    def __len__(self) -> int:
        return self._coords.shape[0]

    def __getitem__(self, i) -> Point:
        return Point(float(self.x[i]), float(self.y[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={len(self)})"

    def sq_dists(self, ids_a, other: "PointSet", ids_b) -> np.ndarray:
        """Squared distances between point ``ids_a[i]`` here and ``ids_b[i]`` in ``other``."""
        return sq_dist_arrays(self.x[ids_a], self.y[ids_a], other.x[ids_b], other.y[ids_b])


class PointSequence(PointSet):
    """A point set whose id order is the traversal order."""

    def __init__(self, coords):
        super().__init__(coords)
        if len(self) < 1:
            raise ValueError("a point sequence needs at least one point")


def as_point_set(obj) -> PointSet:
    if isinstance(obj, PointSet):
        return obj
    return PointSet(obj)


@dataclass(frozen=True)
class SqInterval:
    """Half-open interval ``(lo, hi]`` of squared distances; ``hi`` may be ``inf``."""

    lo: float = 0.0
    hi: float = INF

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval bounds must not be NaN")
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"need 0 <= lo <= hi, got ({self.lo}, {self.hi}]")

    def __contains__(self, v) -> bool:
        return self.lo < v <= self.hi

    def contains(self, v) -> bool:
        return self.lo < v <= self.hi

    def mask(self, values: np.ndarray) -> np.ndarray:
        return (values > self.lo) & (values <= self.hi)

    @property
    def is_empty(self) -> bool:
        return self.hi <= self.lo


@dataclass
class RunStats:
    """Counters filled in by the optimizers; the CLI reports them."""

    stages: int = 0
    decision_calls: int = 0
    gamma_edges: int = 0
    pi_pairs: int = 0
    shrink_rounds: Optional[int] = None
    fallback: bool = False

    def as_dict(self) -> dict:
        return {
            "stages": self.stages,
            "decision_calls": self.decision_calls,
            "gamma_edges": self.gamma_edges,
            "pi_pairs": self.pi_pairs,
            "shrink_rounds": self.shrink_rounds,
        }


def interval_contains(interval: SqInterval, v: float) -> bool:
    return interval.lo < v <= interval.hi


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    """Return a numpy Generator; an existing Generator is passed through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def log2g(x: float) -> float:
    """``log2(max(x, 2))``: keeps asymptotic formulas total at small sizes."""
    return math.log2(max(float(x), 2.0))


def coincident_pair_count(points: PointSet) -> int:
    """Number of unordered pairs of points with identical coordinates."""
    if len(points) < 2:
        return 0
    _, counts = np.unique(points.coords, axis=0, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def coincident_cross_count(a: PointSet, b: PointSet) -> int:
    """Number of pairs ``(i, j)`` with ``a[i]`` and ``b[j]`` at the same location."""
    if len(a) == 0 or len(b) == 0:
        return 0
    ua, ca = np.unique(a.coords, axis=0, return_counts=True)
    ub, cb = np.unique(b.coords, axis=0, return_counts=True)
    allp = np.concatenate([ua, ub])
    _, inv, cnt = np.unique(allp, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    shared = np.flatnonzero(cnt == 2)
    if shared.size == 0:
        return 0
    wa = np.zeros(len(cnt), dtype=np.int64)
    wb = np.zeros(len(cnt), dtype=np.int64)
    wa[inv[: len(ua)]] = ca
    wb[inv[len(ua):]] = cb
    return int(np.sum(wa[shared] * wb[shared]))


def kth_smallest(values: np.ndarray, k: int) -> float:
    """k-th smallest (1-based) entry of ``values`` counted with multiplicity."""
    if not 1 <= k <= len(values):
        raise RankOutOfRange(f"rank {k} outside 1..{len(values)}")
    return float(np.partition(values, k - 1)[k - 1])


def sorted_unique(values: Sequence[float]) -> np.ndarray:
    return np.unique(np.asarray(values, dtype=np.float64))
