"""Entropy of the SRGG given positions, information densities, the per-pair
variance that controls their concentration, and typicality tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connection import LOG2E, ConnectionProfile, hstar_integral
from .errors import DomainError, ImpossibleRealizationError
from .geometry import DomainSpec, integrate_radial, pairwise_distances
from .pairs import num_pairs
from .rng import derive_seed, make_rng
from .sampler import Srgg


def binary_entropy(p):
    """h2(p) in bits; scalar in, scalar out."""
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("probability outside [0, 1]")
    q = 1.0 - arr
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr > 0, -arr * np.log2(arr), 0.0) + np.where(q > 0, -q * np.log2(q), 0.0)
    return float(out) if out.ndim == 0 else out


def h_star(profile: ConnectionProfile, d: int) -> float:
    """omega_d int_0^inf r^{d-1} h2(p(r)) dr in bits."""
    return hstar_integral(profile, d)[0]


def normalizer(n: int, s: float, d: int) -> float:
    """C(n,2) s^d, the effective number of informative pairs."""
    return num_pairs(n) * s**d


@dataclass(frozen=True)
class ConditionalEntropy:
    bits: float          # H(G_n | Z_n)
    per_pair: float      # int f_K(r) h2(p(r/s)) dr
    normalized: float    # per_pair / s^d
    error: float         # quadrature error estimate on ``per_pair``


def conditional_entropy(domain: DomainSpec, profile: ConnectionProfile, n: int, s: float) -> ConditionalEntropy:
    if n < 2:
        raise DomainError("need n >= 2")
    if s <= 0:
        raise DomainError("sparsity must be positive")
    per_pair, err = integrate_radial(
        domain, lambda r: float(profile.entropy_bits(r / s)), scale=s, rtol=1e-9
    )
    return ConditionalEntropy(num_pairs(n) * per_pair, per_pair, per_pair / s**domain.d, err)


def edge_term_variance(domain: DomainSpec, profile: ConnectionProfile, s: float) -> float:
    """Var(Y) for the information Y = -log2 P(X_ij | Z) carried by one pair.

    Law of total variance over the pair distance R:
    Var(Y) = E[h2(p)^2] - E[h2(p)]^2 + E[p(1-p) log2^2(p/(1-p))].
    """
    def quad(g):
        return integrate_radial(domain, lambda r: float(g(r / s)), scale=s, rtol=1e-9)[0]

    mean = quad(profile.entropy_bits)
    second = quad(lambda x: profile.entropy_bits(x) ** 2)
    within = quad(profile.log_odds_variance)
    return max(second - mean * mean + within, 0.0)


def pair_information(profile: ConnectionProfile, scaled_dist, bits) -> np.ndarray:
    """Per-pair -log2 P(x_ij | positions) for indicators ``bits`` at distances
    ``scaled_dist`` = R_ij / s.  Broadcasts over leading axes."""
    lp, lq = profile.log_p(scaled_dist)
    info = -np.where(bits, lp, lq) * LOG2E
    if np.any(np.isinf(info)):
        raise ImpossibleRealizationError(
            "realization has probability zero: an edge where p = 0 or a non-edge where p = 1"
        )
    return info


@dataclass(frozen=True)
class InfoDensitySample:
    raw: float           # -log2 P(G | Z) in bits
    normalized: float    # raw / (C(n,2) s^d)
    n: int
    s: float


def info_density(graph: Srgg, profile: ConnectionProfile | None = None, s: float | None = None) -> InfoDensitySample:
    """Information density of ``graph`` given its own positions."""
    profile = ConnectionProfile.from_name(graph.profile) if profile is None else profile
    s = graph.s if s is None else s
    if graph.n < 2:
        return InfoDensitySample(0.0, 0.0, graph.n, s)
    raw = float(pair_information(profile, graph.distances() / s, graph.bits).sum())
    return InfoDensitySample(raw, raw / normalizer(graph.n, s, graph.domain.d), graph.n, s)


def sample_info_density(n, domain, profile, s, trials, seed):
    """Raw information densities of ``trials`` independent graphs.

    Trial t uses the stream ``derive_seed(seed, t)``, so the graph is exactly
    ``sample_srgg(n, domain, profile, s, derive_seed(seed, t))``.
    """
    out = np.empty(trials)
    m = num_pairs(n)
    for t in range(trials):
        rng = make_rng(derive_seed(seed, t))
        pos = rng.random((n, domain.d))
        u = rng.random(m)
        x = pairwise_distances(domain, pos) / s
        lp, lq = profile.log_p(x)
        edge = u < np.exp(lp)
        out[t] = -np.where(edge, lp, lq).sum() * LOG2E
    return out


@dataclass(frozen=True)
class TypicalityParams:
    epsilon: float
    center: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")


def is_typical(sample: InfoDensitySample, params: TypicalityParams) -> bool:
    return abs(sample.normalized - params.center) <= params.epsilon


def typical_probability_bounds(n: int, s: float, d: int, hstar: float, epsilon: float):
    """Bounds on P(G) for a typical graph: 2^{-C(n,2)s^d(h* +/- eps)}.

    Returned as log2 values ``(lower, upper)``.
    """
    k = normalizer(n, s, d)
    return -k * (hstar + epsilon), -k * (hstar - epsilon)


def chebyshev_atypical_bound(domain, profile, n, s, epsilon) -> float:
    """Chebyshev bound on P(|normalized - mean| > eps) for pairwise-uncorrelated
    pair terms (exact on the torus)."""
    var = edge_term_variance(domain, profile, s) / (num_pairs(n) * s ** (2 * domain.d))
    return min(1.0, var / epsilon**2)
