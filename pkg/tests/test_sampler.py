import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from srgg.connection import ConnectionProfile
from srgg.geometry import SQUARE, TORUS2, DomainSpec
from srgg.pairs import num_pairs, pair_index, pair_indices
from srgg.sampler import Srgg, dumps, expected_edge_count, loads, read_graph, sample_srgg, write_graph

RAYLEIGH = ConnectionProfile()


def test_pair_layout():
    assert [pair_index(i, j) for i, j in [(0, 1), (0, 2), (1, 2), (0, 3)]] == [0, 1, 2, 3]
    i, j = pair_indices(5)
    assert len(i) == num_pairs(5) == 10
    assert all(pair_index(a, b) == k for k, (a, b) in enumerate(zip(i, j)))


def test_sampling_reproducible():
    a = sample_srgg(30, TORUS2, RAYLEIGH, 0.3, 42)
    b = sample_srgg(30, TORUS2, RAYLEIGH, 0.3, 42)
    c = sample_srgg(30, TORUS2, RAYLEIGH, 0.3, 43)
    assert a == b
    assert a != c


def test_edge_accessors():
    g = sample_srgg(12, SQUARE, RAYLEIGH, 0.4, 3)
    edges = g.edge_list()
    assert len(edges) == g.num_edges
    for i, j in edges:
        assert g.has_edge(i, j) and g.has_edge(j, i)
    assert g.mask() == sum(1 << pair_index(i, j) for i, j in edges)


def test_expected_edge_count_matches_mc():
    n, s = 20, 0.2
    counts = [sample_srgg(n, TORUS2, RAYLEIGH, s, seed).num_edges for seed in range(400)]
    mean = expected_edge_count(TORUS2, RAYLEIGH, n, s)
    se = np.std(counts) / np.sqrt(len(counts))
    assert abs(np.mean(counts) - mean) <= 4 * se


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 15), seed=st.integers(0, 2**64 - 1), s=st.floats(0.05, 2.0),
       domain=st.sampled_from([SQUARE, TORUS2, DomainSpec(3, "cube"), DomainSpec(1, "torus")]))
def test_file_roundtrip(n, seed, s, domain):
    g = sample_srgg(n, domain, RAYLEIGH, s, seed)
    assert loads(dumps(g)) == g
    buf = io.StringIO()
    write_graph(g, buf)
    buf.seek(0)
    h = read_graph(buf)
    assert h == g and h.seed == seed and h.s == s and h.domain == domain


def test_header_without_domain_defaults_to_cube():
    text = "srgg v1 n=2 d=2 s=0.5 profile=rayleigh seed=1\nv 0 0.1 0.1\nv 1 0.2 0.2\ne 0 1\n"
    g = loads(text)
    assert g.domain == SQUARE and g.has_edge(0, 1)


def test_from_bits():
    pos = np.zeros((3, 2))
    g = Srgg.from_bits([1, 0, 1], pos, SQUARE)
    assert g.edge_list() == [(0, 1), (1, 2)]
