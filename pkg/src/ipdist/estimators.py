"""Thin scikit-learn style wrappers.

Each estimator takes its parameters in ``__init__``, computes in
``fit`` and stores results in trailing-underscore attributes.  Inputs go
through :func:`sklearn.utils.check_array`, so lists, DataFrames and
arrays of shape ``(n, 2)`` are all accepted.
"""
from __future__ import annotations

import math

from sklearn.base import BaseEstimator
from sklearn.utils import check_array

from .core import RunStats
from .dfd import DfdInstance, dfd1, dfd2
from .selection import SelectionConfig, select_distance, select_distance_bipartite
from .udg import RspInstance, rsp


def check_points(X, name: str = "X"):
    X = check_array(X, dtype="float64", ensure_min_samples=1, input_name=name)
    if X.shape[1] != 2:
        raise ValueError(f"{name} must have exactly two columns, got {X.shape[1]}")
    return X


class _Fitted(BaseEstimator):
    def _store(self, value_sq: float, stats: RunStats):
        self.sq_distance_ = float(value_sq)
        self.distance_ = math.sqrt(value_sq)
        self.stats_ = stats.as_dict()
        return self


class KthDistance(_Fitted):
    """k-th smallest pairwise distance of ``X``, or cross distance of ``X`` and ``Y``."""

    def __init__(self, k: int = 1, count_strategy: str = "grid", random_state=None):
        self.k = k
        self.count_strategy = count_strategy
        self.random_state = random_state

    def fit(self, X, Y=None):
        X = check_points(X)
        cfg = SelectionConfig(count_strategy=self.count_strategy)
        stats = RunStats()
        if Y is None:
            v = select_distance(X, self.k, rng=self.random_state, cfg=cfg, stats=stats)
        else:
            v = select_distance_bipartite(X, check_points(Y, "Y"), self.k, rng=self.random_state, cfg=cfg, stats=stats)
        return self._store(v, stats)


class ShortcutFrechet(_Fitted):
    """Discrete Frechet distance with shortcuts between sequences ``X`` and ``Y``.

    ``one_sided=True`` lets only the ``X`` walker skip points.
    """

    def __init__(self, one_sided: bool = False, random_state=None):
        self.one_sided = one_sided
        self.random_state = random_state

    def fit(self, X, Y):
        inst = DfdInstance(check_points(X), check_points(Y, "Y"))
        stats = RunStats()
        solve = dfd1 if self.one_sided else dfd2
        return self._store(solve(inst, rng=self.random_state, stats=stats), stats)


class ReverseShortestPath(_Fitted):
    """Least unit-disk radius joining ``source`` and ``target`` within ``budget``."""

    def __init__(self, source: int = 0, target: int = 1, budget: float = 1.0, weighted: bool = False,
                 random_state=None):
        self.source = source
        self.target = target
        self.budget = budget
        self.weighted = weighted
        self.random_state = random_state

    def fit(self, X, y=None):
        inst = RspInstance(check_points(X), self.source, self.target, self.budget, self.weighted)
        stats = RunStats()
        return self._store(rsp(inst, rng=self.random_state, stats=stats), stats)


__all__ = ["KthDistance", "ReverseShortestPath", "ShortcutFrechet", "check_points"]
