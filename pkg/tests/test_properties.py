"""Randomized agreement with the brute-force oracles."""
import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from ipdist.brs import BrsOutput, CliqueCover, complete_brs, partial_brs, partial_brs_selfjoin
from ipdist.core import SqInterval, sq_dist
from ipdist.dfd import DfdInstance, dfd1_decide, dfd2_decide
from ipdist.oracle import (
    all_pair_sq_dists,
    brute_brs_check,
    brute_count,
    brute_dfd1,
    brute_dfd2,
    brute_kth,
    brute_rsp_decide,
    cross_sq_dists,
)
from ipdist.selection import count_pairs_at_most, select_distance
from ipdist.udg import RspInstance, udg_decide

coord = st.one_of(
    st.integers(-4, 4).map(float),
    st.floats(-10, 10, allow_nan=False, allow_infinity=False, width=32).map(float),
)
point = st.tuples(coord, coord)
SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def points(min_size, max_size):
    return st.lists(point, min_size=min_size, max_size=max_size).map(lambda p: np.array(p, dtype=float))


@SETTINGS
@given(point, point)
def test_sq_dist_symmetric_and_zero_only_on_equal(p, q):
    assert sq_dist(p, q) == sq_dist(q, p)
    assert (sq_dist(p, q) == 0) == (p == q)


@SETTINGS
@given(points(2, 40), st.data())
def test_selection_matches_sorting(P, data):
    total = len(P) * (len(P) - 1) // 2
    k = data.draw(st.integers(1, total))
    assert select_distance(P, k, rng=data.draw(st.integers(0, 9))) == brute_kth(P, k)


@SETTINGS
@given(points(2, 60), st.data())
def test_count_strategies_match(P, data):
    d = all_pair_sq_dists(P)
    v = data.draw(st.one_of(st.sampled_from(d.tolist()), st.floats(0, 500)))
    want = brute_count(P, v)
    assert count_pairs_at_most(P, v, "grid") == want
    assert count_pairs_at_most(P, v, "brs", 0) == want


@SETTINGS
@given(points(1, 25), points(1, 25), st.data())
def test_brs_contract(A, B, data):
    d = np.unique(cross_sq_dists(A, B))
    lo = data.draw(st.sampled_from([0.0] + d.tolist()))
    hi = data.draw(st.sampled_from([v for v in d.tolist() if v >= lo] + [float("inf")]))
    I = SqInterval(lo, hi)
    seed = data.draw(st.integers(0, 99))
    assert brute_brs_check(A, B, I, partial_brs(A, B, I, 2.0, rng=seed))
    full = BrsOutput(complete_brs(A, B, I, rng=seed), CliqueCover("pi"))
    assert brute_brs_check(A, B, I, full, require_empty_pi=True)
    if len(A) >= 2:
        assert brute_brs_check(A, A, I, partial_brs_selfjoin(A, I, rng=seed))


@SETTINGS
@given(points(1, 15), points(1, 15), st.data())
def test_dfd_decisions_match_state_graph(A, B, data):
    inst = DfdInstance(A, B)
    v = data.draw(st.sampled_from(np.unique(cross_sq_dists(A, B)).tolist()))
    assert dfd2_decide(inst, v) == brute_dfd2(A, B, v)
    assert dfd1_decide(inst, v) == brute_dfd1(A, B, v)


@SETTINGS
@given(points(2, 30), st.data())
def test_udg_decision_matches_explicit_graph(P, data):
    n = len(P)
    s = data.draw(st.integers(0, n - 1))
    t = data.draw(st.integers(0, n - 1))
    assume(s != t)
    weighted = data.draw(st.booleans())
    lam = data.draw(st.floats(0, 30)) if weighted else data.draw(st.integers(0, 6))
    v = data.draw(st.sampled_from(np.unique(np.r_[0.0, all_pair_sq_dists(P)]).tolist()))
    assert udg_decide(RspInstance(P, s, t, lam, weighted), v) == brute_rsp_decide(P, s, t, lam, weighted, v)
