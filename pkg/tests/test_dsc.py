import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from srgg.connection import ConnectionProfile, SparsitySchedule
from srgg.dsc import (COLLISION, DECODED, BlockPartition, DscConfig, bin_index, codebook_bits, decode, encode,
                      extract_block, is_achievable, make_codebook, rate_bound, rate_region, round_half_up,
                      simulate_dsc, symmetric_rates)
from srgg.errors import ConfigError, DomainError, SizeError
from srgg.geometry import TORUS2
from srgg.oracle import mc_graph_table
from srgg.pairs import num_pairs, pair_index
from srgg.rng import make_rng
from srgg.sampler import Srgg, sample_srgg

RAYLEIGH = ConnectionProfile()
HSTAR = math.pi**3 / (6 * math.log(2))
SCHED = SparsitySchedule(1.0, 0.25, 2)  # beta d = 0.5


def graph4(bits):
    return Srgg.from_bits(bits, np.zeros((4, 2)), TORUS2)


def test_partition():
    p = BlockPartition(6, 3)
    assert list(p.nodes(1)) == [2, 3]
    with pytest.raises(ConfigError):
        BlockPartition(5, 2)
    with pytest.raises(DomainError):
        p.nodes(3)


def test_extract_block_examples():
    p = BlockPartition(4, 2)
    empty, full = graph4([0] * 6), graph4([1] * 6)
    np.testing.assert_array_equal(extract_block(empty, p, 0), np.zeros(5))
    np.testing.assert_array_equal(extract_block(full, p, 0), np.ones(5))
    shared = set(p.pairs(0)) & set(p.pairs(1))
    assert shared == {pair_index(i, j) for i, j in [(0, 2), (0, 3), (1, 2), (1, 3)]}


@pytest.mark.parametrize("n", range(1, 13))
def test_edges_stored_once_or_twice(n):
    for L in [L for L in range(1, n + 1) if n % L == 0]:
        p = BlockPartition(n, L)
        counts = np.zeros(num_pairs(n), dtype=int)
        for l in range(L):
            counts[p.pairs(l)] += 1
        for i, j in itertools.combinations(range(n), 2):
            same = p.block_of(i) == p.block_of(j)
            assert counts[pair_index(i, j)] == (1 if same else 2)


def test_bin_index_deterministic_and_zero_rate():
    p = BlockPartition(6, 2)
    cb = make_codebook([1.0, 0.0], p, 0.5, 2, key=7)
    block = make_rng(1).integers(0, 2, 12)
    assert bin_index(cb, 0, block) == bin_index(cb, 0, block)
    assert cb.bits[1] == 0 and bin_index(cb, 1, block) == 0


def test_bin_index_uniform():
    from srgg.dsc import BinningCodebook
    cb = BinningCodebook((1.0,), (8,), (40,), key=12345)
    blocks = make_rng(3).integers(0, 2, (100_000, 40))
    idx = [bin_index(cb, 0, b) for b in blocks]
    assert chisquare(np.bincount(idx, minlength=256)).pvalue > 1e-3


def test_long_blocks_hash():
    from srgg.dsc import BinningCodebook
    cb = BinningCodebook((1.0,), (20,), (150,), key=1)
    a = np.zeros(150, dtype=np.uint8)
    b = a.copy()
    b[140] = 1
    assert bin_index(cb, 0, a) != bin_index(cb, 0, b)


def test_injective_bins():
    from srgg.dsc import BinningCodebook
    cb = BinningCodebook((1.0,), (5,), (5,), key=99)
    idx = {bin_index(cb, 0, [(v >> k) & 1 for k in range(5)]) for v in range(32)}
    assert len(idx) == 32


def test_codebook_bits_rounding():
    assert round_half_up(2.5) == 3 and round_half_up(3.5) == 4
    assert codebook_bits(1.0, 6, 2, 0.5, 2) == round_half_up(30 * 0.25 / 2)
    with pytest.raises(ConfigError):
        make_codebook([100.0, 100.0], BlockPartition(20, 2), 1.0, 2, 0)


def test_rate_bound_values():
    assert rate_bound(2, [0, 1], SCHED, HSTAR) == pytest.approx(HSTAR / 2)
    assert rate_bound(2, [1], SCHED, HSTAR) == pytest.approx(HSTAR / 2 / math.sqrt(2))
    dense = SparsitySchedule(1.0, 1e-9, 2)
    assert rate_bound(4, [0], dense, HSTAR) == pytest.approx(HSTAR / 8, rel=1e-8)
    with pytest.raises(DomainError):
        rate_bound(2, [], SCHED, HSTAR)


def test_achievability_corners():
    assert is_achievable([HSTAR / 2] * 2, 2, SCHED, HSTAR)[0]
    ok, worst = is_achievable([0.0, 0.0], 2, SCHED, HSTAR)
    assert not ok and worst.mask == 3
    ok, worst = is_achievable([HSTAR / 2, 0.0], 2, SCHED, HSTAR)
    assert not ok and worst.mask == 2 and worst.required == pytest.approx(2.63589, abs=1e-4)


@pytest.mark.parametrize("L", range(1, 7))
def test_rate_region_structure(L):
    bounds = dict(rate_region(L, SCHED, HSTAR))
    for a in bounds:
        for b in bounds:
            if a & b == 0:
                assert bounds[a | b] <= bounds[a] + bounds[b] + 1e-12
            if a & b == a:
                assert bounds[a] <= bounds[b] + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=3, max_size=3), st.integers(0, 2), st.floats(0, 3))
def test_achievability_monotone(rates, which, bump):
    before = is_achievable(rates, 3, SCHED, HSTAR)[0]
    rates[which] += bump
    assert is_achievable(rates, 3, SCHED, HSTAR)[0] or not before


def _genie(graph, cb, p, eps, center=HSTAR):
    return decode(encode(graph, p, cb), cb, p, eps, center,
                  positions=graph.positions, domain=graph.domain, profile=RAYLEIGH, s=graph.s)


@pytest.mark.parametrize("seed", range(5))
def test_decode_recovers_truth_with_injective_bins(seed):
    p = BlockPartition(6, 2)
    g = sample_srgg(6, TORUS2, RAYLEIGH, 0.4, seed)
    cb = make_codebook([10.0, 10.0], p, 0.4, 2, seed)
    assert all(cb.injective(l) for l in range(2))
    out = _genie(g, cb, p, math.inf)
    assert out.status == DECODED and out.graph == g.mask()


def test_decode_collision_at_zero_rate():
    p = BlockPartition(4, 2)
    g = sample_srgg(4, TORUS2, RAYLEIGH, 0.4, 1)
    cb = make_codebook([0.0, 0.0], p, 0.4, 2, 0)
    assert _genie(g, cb, p, math.inf).status == COLLISION


def test_decode_marginal_mode():
    p = BlockPartition(4, 2)
    table = mc_graph_table(4, TORUS2, RAYLEIGH, 0.4, 50_000, 0)
    g = sample_srgg(4, TORUS2, RAYLEIGH, 0.4, 5)
    cb = make_codebook([20.0, 20.0], p, 0.4, 2, 3)
    out = decode(encode(g, p, cb), cb, p, math.inf, HSTAR, table=table)
    assert out.status == DECODED and out.graph == g.mask()


def test_decode_limits():
    p = BlockPartition(8, 2)
    cb = make_codebook([1.0, 1.0], p, 0.3, 2, 0)
    with pytest.raises(SizeError):
        decode([0, 0], cb, p, 1.0, HSTAR, positions=np.zeros((8, 2)), domain=TORUS2, profile=RAYLEIGH, s=0.3)
    with pytest.raises(ConfigError):
        decode([0, 0], make_codebook([1.0, 1.0], BlockPartition(4, 2), 0.3, 2, 0), BlockPartition(4, 2), 1.0, HSTAR)


def test_simulation_injective_has_no_collisions():
    cfg = DscConfig(trials=100, gammas=(4.0,))
    res = simulate_dsc(cfg)
    sm = res.summary(4.0)
    assert all(b >= 12 for b in sm.bits)
    assert sm.collisions == 0 and sm.errors == sm.atypical


def test_simulation_deterministic_and_worker_invariant():
    cfg = DscConfig(trials=40, gammas=(0.5, 1.0))
    a, b = simulate_dsc(cfg), simulate_dsc(cfg, workers=2)
    assert [(r.trial, r.outcome, r.seed) for r in a.records] == [(r.trial, r.outcome, r.seed) for r in b.records]


def test_symmetric_rates_are_tight():
    rates = symmetric_rates(2, SCHED, HSTAR)
    assert is_achievable(rates, 2, SCHED, HSTAR)[0]
    assert not is_achievable([0.99 * r for r in rates], 2, SCHED, HSTAR)[0]


@pytest.mark.slow
def test_generous_rates_beat_low_rates():
    # 1.5x vs 0.5x the region at eps=0.8: success gap >= 0.2 over 1e3 paired trials
    res = simulate_dsc(DscConfig(trials=1000, gammas=(0.5, 1.5), epsilon=0.8))
    lo, hi = res.summary(0.5), res.summary(1.5)
    assert (1 - hi.p_error) - (1 - lo.p_error) >= 0.2


@pytest.mark.slow
def test_generous_rates_beat_low_rates_loose_typicality():
    res = simulate_dsc(DscConfig(trials=1000, gammas=(0.5, 1.5), epsilon=8.0))
    lo, hi = res.summary(0.5), res.summary(1.5)
    assert (1 - hi.p_error) - (1 - lo.p_error) >= 0.2
