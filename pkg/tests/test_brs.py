import numpy as np
import pytest

from ipdist.brs import (
    Biclique,
    BrsOutput,
    CliqueCover,
    brs_for_L,
    complete_brs,
    count_gamma_edges,
    partial_brs,
    partial_brs_bipartite,
    partial_brs_selfjoin,
    sample_uncertain_pair,
)
from ipdist.core import INF, PointSet, SqInterval
from ipdist.oracle import brute_brs_check

from conftest import GENERATORS


def pair_multiset(cover):
    a, b = cover.pairs()
    return sorted(zip(a.tolist(), b.tolist()))


def test_singleton_in_range_pair_recorded_once():
    out = partial_brs([(0, 0)], [(1, 0)], SqInterval(0.25, 2.25), 4.0, rng=0)
    assert pair_multiset(out.gamma) + pair_multiset(out.pi) == [(0, 0)]


def test_singleton_out_of_range_pair_never_certified():
    out = partial_brs([(0, 0)], [(5, 0)], SqInterval(0.25, 2.25), 4.0, rng=0)
    assert out.gamma.edge_count == 0


def test_selfjoin_unit_square(corners):
    I = SqInterval(0.5, 1.5)
    out = partial_brs_selfjoin(corners, I, rng=0)
    assert brute_brs_check(corners, corners, I, out)
    d = lambda a, b: ((corners[a] - corners[b]) ** 2).sum()
    assert all(d(a, b) != 2 for a, b in pair_multiset(out.gamma))
    recorded = pair_multiset(out.gamma) + pair_multiset(out.pi)
    in_range = [p for p in recorded if I.contains(d(*p))]
    assert len(in_range) == 8


def test_selfjoin_coincident_points_excluded_by_open_low_end():
    P = [(0.5, 0.5), (0.5, 0.5)]
    out = partial_brs_selfjoin(P, SqInterval(0, 1), rng=0)
    assert out.gamma.edge_count == 0
    assert brute_brs_check(P, P, SqInterval(0, 1), out)


def test_complete_small_examples():
    cover = complete_brs([(0, 0)], [(0, 1), (0, 3)], SqInterval(0, 4), rng=0)
    assert pair_multiset(cover) == [(0, 0)]
    rng = np.random.default_rng(0)
    A, B = rng.random((50, 2)), rng.random((50, 2))
    cover = complete_brs(A, B, SqInterval(0, INF), rng=1)
    assert int(cover.pair_sizes.sum()) == 2500


def test_complete_preserves_order():
    rng = np.random.default_rng(4)
    A, B = rng.random((300, 2)), rng.random((3000, 2))
    I = SqInterval(0.0004, 0.0025)
    cover = complete_brs(A, B, I, rng=4, preserve_order=True)
    assert brute_brs_check(A, B, I, BrsOutput(cover, CliqueCover("pi")), require_empty_pi=True)
    assert cover.sides_sorted()


def test_empty_interval_gives_nothing():
    rng = np.random.default_rng(0)
    A, B = rng.random((30, 2)), rng.random((30, 2))
    out = brs_for_L(A, B, SqInterval(0, 0), 5.0, rng=0)
    assert len(out.gamma) == 0 and len(out.pi) == 0


@pytest.mark.parametrize("L", [1.0, 40.0, 160000.0])
def test_brs_for_L_contract(L):
    rng = np.random.default_rng(int(L))
    A, B = rng.random((200, 2)), rng.random((200, 2))
    I = SqInterval(0.002, 0.02)
    assert brute_brs_check(A, B, I, brs_for_L(A, B, I, L, rng=1))


def test_partial_uncertain_pairs_shrink_with_r():
    rng = np.random.default_rng(9)
    A, B = rng.random((400, 2)), rng.random((400, 2))
    I = SqInterval(0.01, 0.04)
    sizes = {}
    for r in (2.0, 4.0, 8.0):
        out = partial_brs(A, B, I, r, rng=3)
        assert brute_brs_check(A, B, I, out)
        sizes[r] = out.pi.edge_count
        # uncertain pairs stay within a constant times mn / r^2
        assert out.pi.edge_count <= 64 * 400 * 400 / r**2
    assert sizes[8.0] < sizes[2.0]


@pytest.mark.parametrize("kind", sorted(GENERATORS))
@pytest.mark.parametrize("seed", range(4))
def test_all_variants_satisfy_contract(kind, seed):
    rng = np.random.default_rng(seed)
    gen = GENERATORS[kind]
    A, B = PointSet(gen(rng, 120)), PointSet(gen(rng, 90))
    d = ((A.coords[:, None, :] - B.coords[None, :, :]) ** 2).sum(-1).ravel()
    lo, hi = np.sort(rng.choice(d, 2))
    I = SqInterval(float(lo), float(hi))
    assert brute_brs_check(A, B, I, partial_brs(A, B, I, 3.0, rng=seed))
    assert brute_brs_check(A, B, I, partial_brs_bipartite(A, B, I, rng=seed))
    assert brute_brs_check(A, A, I, partial_brs_selfjoin(A, I, rng=seed))
    cover = complete_brs(A, B, I, rng=seed)
    assert brute_brs_check(A, B, I, BrsOutput(cover, CliqueCover("pi")), require_empty_pi=True)


def test_edge_count_arithmetic():
    cover = CliqueCover.from_bicliques("gamma", [([0, 1], [0, 1, 2]), ([2], [0, 1, 2, 3])])
    assert count_gamma_edges(BrsOutput(cover, CliqueCover("pi"))) == 10
    assert isinstance(cover[0], Biclique) and cover[1].n_pairs == 4


def test_sampler_single_pair():
    out = BrsOutput(CliqueCover("gamma"), CliqueCover.from_bicliques("pi", [([3], [7])]))
    assert {sample_uncertain_pair(out, s) for s in range(20)} == {(3, 7)}


def test_sampler_is_pair_weighted():
    pi = CliqueCover.from_bicliques("pi", [([0, 1], [0, 1]), ([2, 3, 4, 5], [2, 3, 4, 5])])
    a, _ = pi.sample_pairs(100_000, np.random.default_rng(0))
    freq = float(np.mean(a < 2))
    p = 4 / 20
    assert abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / 100_000)


def test_checker_reports_duplicates():
    A = [(0, 0), (1, 0)]
    B = [(0, 1)]
    I = SqInterval(0, 4)
    good = BrsOutput(CliqueCover.from_bicliques("gamma", [([0, 1], [0])]), CliqueCover("pi"))
    assert brute_brs_check(A, B, I, good)
    bad = BrsOutput(good.gamma, CliqueCover.from_bicliques("pi", [([1], [0])]))
    rep = brute_brs_check(A, B, I, bad)
    assert not rep and rep.pair == (1, 0)
