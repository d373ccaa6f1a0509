import math

import numpy as np
import pytest

from srgg.connection import ConnectionProfile
from srgg.errors import DomainError, ImpossibleRealizationError
from srgg.geometry import SQUARE, TORUS2, DomainSpec
from srgg.infotheory import (InfoDensitySample, TypicalityParams, binary_entropy, chebyshev_atypical_bound,
                             conditional_entropy, edge_term_variance, h_star, info_density, is_typical,
                             normalizer, pair_information, sample_info_density, typical_probability_bounds)
from srgg.sampler import Srgg, sample_srgg

RAYLEIGH = ConnectionProfile()
HSTAR = math.pi**3 / (6 * math.log(2))


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 == binary_entropy(1.0)
    np.testing.assert_allclose(binary_entropy(np.array([0.1, 0.9])), 0.4689955935892812)
    with pytest.raises(DomainError):
        binary_entropy(1.5)


def test_h_star():
    assert h_star(RAYLEIGH, 2) == pytest.approx(HSTAR, rel=1e-10)


@pytest.mark.parametrize("s", [0.1, 0.05])
def test_torus_exact_for_small_s(s):
    # exact once the profile is negligible beyond half the side
    assert conditional_entropy(TORUS2, RAYLEIGH, 2, s).normalized == pytest.approx(HSTAR, abs=1e-6)


def test_torus_truncation_at_large_s():
    assert conditional_entropy(TORUS2, RAYLEIGH, 2, 0.2).normalized < HSTAR - 0.03


def test_square_deficit_scales_linearly():
    deficits = [HSTAR - conditional_entropy(SQUARE, RAYLEIGH, 2, s).normalized for s in (0.2, 0.1, 0.05)]
    assert all(d > 0 for d in deficits)
    assert 1.6 <= deficits[0] / deficits[1] <= 2.4
    assert 1.6 <= deficits[1] / deficits[2] <= 2.4


def test_conditional_entropy_counts_pairs():
    ce = conditional_entropy(SQUARE, RAYLEIGH, 10, 0.1)
    assert ce.bits == pytest.approx(45 * ce.per_pair)


def test_edge_term_variance_matches_mc():
    s = 0.1
    raw = sample_info_density(2, TORUS2, RAYLEIGH, s, 200_000, 5)
    var = edge_term_variance(TORUS2, RAYLEIGH, s)
    se = var * math.sqrt(2 / len(raw)) * 5  # heavy tails: generous
    assert np.var(raw) == pytest.approx(var, abs=se)


def test_variance_scaling_near_linear_in_s_squared():
    v = {s: edge_term_variance(TORUS2, RAYLEIGH, s) / s**2 for s in (0.1, 0.05, 0.025)}
    # Var(Y)/s^2 -> A - s^2 h*^2 with A constant
    a = [v[s] + s**2 * HSTAR**2 for s in v]
    assert max(a) / min(a) - 1 < 0.01


def test_info_density_matches_sampler():
    g = sample_srgg(40, TORUS2, RAYLEIGH, 0.2, 9)
    x = info_density(g)
    lp, lq = RAYLEIGH.log_p(g.distances() / 0.2)
    assert x.raw == pytest.approx(-np.where(g.bits, lp, lq).sum() / math.log(2))
    assert x.normalized == pytest.approx(x.raw / normalizer(40, 0.2, 2))


def test_sample_info_density_reproduces_graphs():
    from srgg.rng import derive_seed
    raw = sample_info_density(25, SQUARE, RAYLEIGH, 0.3, 3, 17)
    for t in range(3):
        g = sample_srgg(25, SQUARE, RAYLEIGH, 0.3, derive_seed(17, t))
        assert info_density(g).raw == pytest.approx(raw[t], rel=1e-12)


def test_impossible_realization():
    prof = ConnectionProfile("constant", 1.0)
    with pytest.raises(ImpossibleRealizationError):
        pair_information(prof, np.array([0.5]), np.array([0]))


def test_typicality_predicate():
    params = TypicalityParams(0.5, HSTAR)
    assert is_typical(InfoDensitySample(0, HSTAR, 10, 0.1), params)
    assert not is_typical(InfoDensitySample(0, HSTAR + 1.0, 10, 0.1), params)
    with pytest.raises(DomainError):
        TypicalityParams(0.0, HSTAR)


def test_typical_probability_bounds_symmetric():
    lo, hi = typical_probability_bounds(100, 0.1, 2, HSTAR, 0.2)
    k = normalizer(100, 0.1, 2)
    assert lo == pytest.approx(-k * (HSTAR + 0.2)) and hi == pytest.approx(-k * (HSTAR - 0.2))


@pytest.mark.slow
def test_typical_probability_at_n200():
    # P(typical) >= 0.99 at n=200, s=0.1, eps=0.5 over 1e4 graphs
    raw = sample_info_density(200, TORUS2, RAYLEIGH, 0.1, 10_000, 7)
    x = raw / normalizer(200, 0.1, 2)
    center = conditional_entropy(TORUS2, RAYLEIGH, 2, 0.1).normalized
    frac = np.mean(np.abs(x - center) <= 0.5)
    assert 1 - frac <= chebyshev_atypical_bound(TORUS2, RAYLEIGH, 200, 0.1, 0.5)
    assert frac >= 0.99
