import math

import numpy as np
import pytest

from srgg.errors import DimensionError, DomainError
from srgg.geometry import (SQUARE, TORUS2, DomainSpec, density_breakpoints, distance, integrate_radial,
                           pair_distance_density, pairwise_distances, sample_points, small_r_sphere_area)
from srgg.quadrature import integrate_pieces

ALL_DOMAINS = [DomainSpec(d, shape) for d in (1, 2, 3) for shape in ("cube", "torus")]


@pytest.mark.parametrize("domain", ALL_DOMAINS, ids=lambda dm: dm.name)
def test_density_normalizes(domain):
    total, _ = integrate_pieces(lambda r: float(pair_distance_density(domain, r)), density_breakpoints(domain))
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("domain", ALL_DOMAINS, ids=lambda dm: dm.name)
def test_density_matches_histogram(domain):
    pts = sample_points(400_000, domain, 11).reshape(200_000, 2, domain.d)
    dist = pairwise_distances(domain, pts)[:, 0]
    edges = np.linspace(0, domain.diameter, 21)
    hist, _ = np.histogram(dist, bins=edges)
    expected = np.array([integrate_pieces(lambda r: float(pair_distance_density(domain, r)), [a, b])[0]
                         for a, b in zip(edges[:-1], edges[1:])]) * len(dist)
    sd = np.sqrt(expected + 1)
    assert np.all(np.abs(hist - expected) <= 5 * sd)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_small_r_behaviour(d):
    r = 1e-3
    for shape in ("cube", "torus"):
        f = float(pair_distance_density(DomainSpec(d, shape), r))
        assert f / (small_r_sphere_area(d) * r ** (d - 1)) == pytest.approx(1.0, abs=5e-3)


def test_square_closed_form_values():
    r = 0.5
    assert float(pair_distance_density(SQUARE, r)) == pytest.approx(2 * r * (math.pi - 4 * r + r * r))
    assert float(pair_distance_density(SQUARE, math.sqrt(2))) == pytest.approx(0.0, abs=1e-7)
    assert float(pair_distance_density(TORUS2, 0.3)) == pytest.approx(2 * math.pi * 0.3)


def test_density_outside_support():
    with pytest.raises(DomainError):
        pair_distance_density(SQUARE, 1.5)
    with pytest.raises(DomainError):
        pair_distance_density(TORUS2, -0.1)


def test_torus_distance_wraps():
    assert distance(TORUS2, [0.05, 0.5], [0.95, 0.5]) == pytest.approx(0.1)
    assert distance(SQUARE, [0.05, 0.5], [0.95, 0.5]) == pytest.approx(0.9)
    with pytest.raises(DimensionError):
        distance(TORUS2, [0.1, 0.2, 0.3], [0.0, 0.0])


def test_pairwise_distances_pair_order():
    pts = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, 0.4], [0.3, 0.4]])
    got = pairwise_distances(SQUARE, pts)
    np.testing.assert_allclose(got, [0.3, 0.4, 0.5, 0.5, 0.4, 0.3])


def test_sampling_is_deterministic():
    np.testing.assert_array_equal(sample_points(10, TORUS2, 5), sample_points(10, TORUS2, 5))
    assert not np.array_equal(sample_points(10, TORUS2, 5), sample_points(10, TORUS2, 6))


def test_names_roundtrip():
    for dm in ALL_DOMAINS:
        assert DomainSpec.from_name(dm.name) == dm
    with pytest.raises(DomainError):
        DomainSpec.from_name("sphere")


def test_integrate_radial_mean_distance():
    # mean distance of two uniform points in the unit square
    exact = (2 + math.sqrt(2) + 5 * math.asinh(1)) / 15
    value, _ = integrate_radial(SQUARE, lambda r: r)
    assert value == pytest.approx(exact, rel=1e-9)
