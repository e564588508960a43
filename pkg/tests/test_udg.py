import math

import numpy as np
import pytest

from ipdist.core import NoFeasibleValue
from ipdist.oracle import all_pair_sq_dists, brute_rsp, brute_rsp_decide
from ipdist.udg import RspInstance, hop_distance, path_length, rsp, udg_decide

CHAIN = [(float(i), 0.0) for i in range(10)]


def test_chain_decisions():
    assert udg_decide(RspInstance(CHAIN, 0, 9, 9), 1.0)
    assert not udg_decide(RspInstance(CHAIN, 0, 9, 3), 4.0)
    assert udg_decide(RspInstance(CHAIN, 0, 9, 3), 9.0)
    assert udg_decide(RspInstance(CHAIN, 0, 9, 9.0, weighted=True), 1.0)
    assert not udg_decide(RspInstance(CHAIN, 0, 9, 8.9, weighted=True), 1.0)


@pytest.mark.parametrize("lam,want", [(1, 81.0), (2, 25.0), (3, 9.0), (4, 9.0), (5, 4.0), (9, 1.0)])
def test_chain_optimum(lam, want):
    assert rsp(RspInstance(CHAIN, 0, 9, lam), rng=0) == want


def test_hops_and_lengths():
    assert hop_distance(RspInstance(CHAIN, 0, 9, 9).points, 0, 9, 4.0) == 5
    assert path_length(RspInstance(CHAIN, 0, 9, 9).points, 0, 9, 4.0) == pytest.approx(9.0)
    assert math.isinf(hop_distance(RspInstance(CHAIN, 0, 9, 9).points, 0, 9, 0.5))


def test_instance_validation():
    with pytest.raises(ValueError):
        RspInstance(CHAIN, 0, 0, 3)
    with pytest.raises(ValueError):
        RspInstance(CHAIN, 0, 10, 3)
    with pytest.raises(ValueError):
        RspInstance(CHAIN, 0, 9, -1)
    with pytest.warns(UserWarning):
        inst = RspInstance(CHAIN, 0, 9, 3.7)
    assert inst.lam == 3.0


def test_infeasible_budget():
    with pytest.raises(NoFeasibleValue):
        rsp(RspInstance(CHAIN, 0, 9, 0), rng=0)
    with pytest.raises(NoFeasibleValue):
        rsp(RspInstance(CHAIN, 0, 9, 8.5, weighted=True), rng=0)


def test_coincident_source_and_target():
    P = [(0.0, 0.0), (0.0, 0.0), (5.0, 0.0)]
    assert rsp(RspInstance(P, 0, 1, 1), rng=0) == 0.0
    assert rsp(RspInstance(P, 0, 1, 0.0, weighted=True), rng=0) == 0.0


@pytest.mark.parametrize("weighted", [False, True])
def test_decision_matches_explicit_graph(weighted):
    rng = np.random.default_rng(int(weighted))
    P = rng.random((120, 2))
    d = np.unique(all_pair_sq_dists(P))
    for trial in range(10):
        s, t = rng.choice(120, 2, replace=False)
        lam = float(rng.random() * 2) if weighted else int(rng.integers(1, 6))
        inst = RspInstance(P, s, t, lam, weighted)
        for v in rng.choice(d, 8):
            assert udg_decide(inst, v) == brute_rsp_decide(P, s, t, lam, weighted, v)


def test_decision_monotone_on_lattice():
    rng = np.random.default_rng(3)
    P = rng.integers(0, 6, (40, 2)).astype(float)
    inst = RspInstance(P, 0, 1, 3)
    got = [udg_decide(inst, v) for v in np.unique(all_pair_sq_dists(P))]
    assert got == sorted(got)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("weighted", [False, True])
def test_optimum_matches_sweep(seed, weighted):
    rng = np.random.default_rng(seed)
    P = rng.random((150, 2))
    s, t = rng.choice(150, 2, replace=False)
    direct = math.sqrt(((P[s] - P[t]) ** 2).sum())
    lam = direct * (1 + rng.random()) if weighted else int(rng.integers(1, 8))
    assert rsp(RspInstance(P, s, t, lam, weighted), rng=seed) == brute_rsp(P, s, t, lam, weighted)
