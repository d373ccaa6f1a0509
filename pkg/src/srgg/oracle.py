"""Brute-force checks at tiny n.

A :class:`GraphProbabilityTable` holds a Monte-Carlo estimate of the marginal
law P(G) over all 2^C(n,2) labelled graphs: for each position draw the exact
conditional law of every graph is enumerated, then averaged over draws.
Standard errors follow from the per-draw sample moments.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .connection import ConnectionProfile
from .errors import DomainError, SizeError
from .geometry import DomainSpec, pairwise_distances
from .infotheory import binary_entropy, conditional_entropy
from .pairs import num_pairs, pair_indices
from .rng import derive_seed, make_rng

MAX_NODES = 5
BATCH = 8192
_LOG_FLOOR = -1.0e4  # exp() of this underflows to 0 but 0 * floor stays finite
_COV_LIMIT = 64      # keep the full covariance only for tables this small


def graph_bits(n: int) -> np.ndarray:
    """(2^m, m) matrix of pair indicators; row g is the graph with bitmask g."""
    m = num_pairs(n)
    g = np.arange(1 << m, dtype=np.int64)
    return ((g[:, None] >> np.arange(m)) & 1).astype(np.float64)


@dataclass
class GraphProbabilityTable:
    n: int
    probabilities: np.ndarray
    se: np.ndarray
    trials: int
    domain: DomainSpec | None = None
    profile: str = ""
    s: float = float("nan")
    cov: np.ndarray | None = field(default=None, repr=False)

    @property
    def se_max(self) -> float:
        return float(self.se.max())

    @property
    def m(self) -> int:
        return num_pairs(self.n)

    def functional_se(self, weights) -> float:
        """Standard error of sum_g weights[g] * P_hat(g).

        Exact from the covariance when available, otherwise the Minkowski
        bound sum |w_g| se_g.
        """
        w = np.asarray(weights, dtype=float)
        if self.cov is not None:
            return float(math.sqrt(max(w @ self.cov @ w, 0.0)))
        return float(np.abs(w) @ self.se)

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["graph_index", "bitmask", "prob", "se"])
        for g, (p, e) in enumerate(zip(self.probabilities, self.se)):
            writer.writerow([g, format(g, f"0{self.m}b") if self.m else "", repr(float(p)), repr(float(e))])


def _batch_moments(args):
    n, domain, profile, s, size, seed = args
    rng = make_rng(seed)
    pos = rng.random((size, n, domain.d))
    lp, lq = profile.log_p(pairwise_distances(domain, pos) / s)
    lp = np.maximum(lp, _LOG_FLOOR)
    lq = np.maximum(lq, _LOG_FLOOR)
    bits = graph_bits(n)
    v = np.exp(lp @ bits.T + lq @ (1.0 - bits).T)
    outer = v.T @ v if v.shape[1] <= _COV_LIMIT else None
    return v.sum(axis=0), (v * v).sum(axis=0), outer


def mc_graph_table(n, domain, profile, s, trials, seed, workers=1) -> GraphProbabilityTable:
    """Estimate P(G) for every labelled graph on ``n <= 5`` nodes."""
    if n > MAX_NODES:
        raise SizeError(f"graph tables are limited to n <= {MAX_NODES}")
    if n < 1:
        raise DomainError("need n >= 1")
    if trials < 1:
        raise DomainError("need at least one trial")
    jobs = []
    done = 0
    b = 0
    while done < trials:
        size = min(BATCH, trials - done)
        jobs.append((n, domain, profile, s, size, derive_seed(seed, b)))
        done += size
        b += 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_batch_moments, jobs))
    else:
        parts = [_batch_moments(j) for j in jobs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / trials
    var = np.maximum(s2 / trials - mean * mean, 0.0)
    denom = max(trials - 1, 1)
    se = np.sqrt(var * trials / denom / trials)
    cov = None
    if parts[0][2] is not None:
        outer = sum(p[2] for p in parts)
        cov = (outer / trials - np.outer(mean, mean)) / denom
    return GraphProbabilityTable(n, mean, se, trials, domain, profile.name, float(s), cov)


def _marginal(table, keep):
    """Marginal law on the pairs ``keep`` and the map graph -> marginal cell."""
    keep = list(keep)
    g = np.arange(len(table.probabilities), dtype=np.int64)
    cell = np.zeros_like(g)
    for pos, k in enumerate(keep):
        cell |= ((g >> k) & 1) << pos
    probs = np.bincount(cell, weights=table.probabilities, minlength=1 << len(keep))
    return probs, cell


def _entropy_terms(probs):
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(probs > 0, np.log2(np.where(probs > 0, probs, 1.0)), 0.0)
    return float(-(probs * logs).sum()), logs


def _marginal_entropy(table, keep):
    """H of the marginal on ``keep`` and its gradient w.r.t. the table entries."""
    probs, cell = _marginal(table, keep)
    h, logs = _entropy_terms(probs)
    # d/dP(g) of -sum P log2 P is -(log2 P(cell(g)) + log2 e); the constant
    # drops out because every draw's table sums to one.
    return h, -logs[cell]


def entropy_of_table(table: GraphProbabilityTable, with_se: bool = False):
    h, grad = _marginal_entropy(table, range(table.m))
    return (h, table.functional_se(grad)) if with_se else h


def _conditional(table, target, given, with_se):
    h_joint, g_joint = _marginal_entropy(table, sorted(set(target) | set(given)))
    h_given, g_given = _marginal_entropy(table, sorted(set(given)))
    value = h_joint - h_given
    return (value, table.functional_se(g_joint - g_given)) if with_se else value


def _check_subset(n, S):
    S = sorted(set(int(v) for v in S))
    if not S:
        raise DomainError("node subset must be nonempty")
    if S[0] < 0 or S[-1] >= n:
        raise DomainError("node subset out of range")
    return S


def neighborhood_conditional_entropy(table: GraphProbabilityTable, S, with_se: bool = False):
    """H(N_S | N_{S^c}), where N_i is the vector of indicators of pairs at i.

    Conditioning on the neighbourhoods of S^c fixes every pair that touches
    S^c, including the pairs joining S to S^c.
    """
    S = _check_subset(table.n, S)
    i, j = pair_indices(table.n)
    inS_i, inS_j = np.isin(i, S), np.isin(j, S)
    touch_S = np.flatnonzero(inS_i | inS_j)
    touch_Sc = np.flatnonzero(~inS_i | ~inS_j)
    return _conditional(table, touch_S, touch_Sc, with_se)


def within_conditional_entropy(table: GraphProbabilityTable, S, with_se: bool = False):
    """H(pairs inside S | pairs inside S^c): the neighbourhood entropy with the
    S-to-S^c pairs dropped from both sides."""
    S = _check_subset(table.n, S)
    i, j = pair_indices(table.n)
    inS_i, inS_j = np.isin(i, S), np.isin(j, S)
    inside = np.flatnonzero(inS_i & inS_j)
    outside = np.flatnonzero(~inS_i & ~inS_j)
    return _conditional(table, inside, outside, with_se)


def relabel_table(table: GraphProbabilityTable, perm) -> np.ndarray:
    """Probabilities after relabelling node v as perm[v]."""
    n = table.n
    i, j = pair_indices(n)
    lookup = {}
    for k, (a, b) in enumerate(zip(i.tolist(), j.tolist())):
        pa, pb = sorted((perm[a], perm[b]))
        lookup[k] = pb * (pb - 1) // 2 + pa
    g = np.arange(len(table.probabilities), dtype=np.int64)
    image = np.zeros_like(g)
    for k, k2 in lookup.items():
        image |= ((g >> k) & 1) << k2
    out = np.empty_like(table.probabilities)
    out[image] = table.probabilities
    return out


@dataclass
class H2Report:
    trials: int
    max_excess: float
    violations: int
    worst: tuple[float, float]


def check_h2_inequality(trials: int, seed: int, tol: float = 1e-12) -> H2Report:
    """Sweep |h2(x) - h2(y)| <= h2(|x - y|) over uniform pairs plus edge cases."""
    if trials < 1:
        raise DomainError("need at least one trial")
    rng = make_rng(seed)
    xy = rng.random((trials, 2))
    edges = np.array([[0, 0], [0, 1], [1, 0], [1, 1], [0.5, 0], [0.5, 1], [0.3, 0.7], [1e-300, 1.0]])
    xy = np.vstack([xy, edges])
    x, y = xy[:, 0], xy[:, 1]
    excess = np.abs(binary_entropy(x) - binary_entropy(y)) - binary_entropy(np.abs(x - y))
    k = int(np.argmax(excess))
    return H2Report(len(xy), float(excess[k]), int((excess > tol).sum()), (float(x[k]), float(y[k])))


@dataclass
class GapResult:
    gap: float
    se: float
    table_entropy: float
    conditional: float


def entropy_gap(n, domain, profile, s, trials, seed, workers=1) -> GapResult:
    """H(G_n) - H(G_n | Z_n): table entropy minus the quadrature conditional entropy."""
    table = mc_graph_table(n, domain, profile, s, trials, seed, workers)
    h, se = entropy_of_table(table, with_se=True)
    cond = conditional_entropy(domain, profile, n, s).bits if n >= 2 else 0.0
    return GapResult(h - cond, se, h, cond)


def sampled_table_information(table: GraphProbabilityTable, trials: int, seed: int):
    """Mean and SE of -log2 P_hat(G) over freshly sampled graphs."""
    domain = table.domain
    profile = ConnectionProfile.from_name(table.profile)
    n, m = table.n, table.m
    total = 0.0
    total_sq = 0.0
    done = 0
    b = 0
    weights = (1 << np.arange(m)).astype(np.int64)
    with np.errstate(divide="ignore"):
        info = -np.log2(table.probabilities)
    while done < trials:
        size = min(BATCH, trials - done)
        rng = make_rng(derive_seed(seed, b))
        pos = rng.random((size, n, domain.d))
        u = rng.random((size, m))
        edges = u < profile(pairwise_distances(domain, pos) / table.s)
        vals = info[edges.astype(np.int64) @ weights]
        total += vals.sum()
        total_sq += (vals * vals).sum()
        done += size
        b += 1
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    return mean, math.sqrt(var / trials)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    reference: float
    tolerance: float
    detail: str = ""


def run_oracle_suite(n=4, domain=None, profile=None, s=0.3, trials=10**6, seed=0, workers=1):
    """All brute-force checks at desk scale; returns a list of CheckResult."""
    from .geometry import TORUS2
    from .sampler import expected_edge_count

    domain = TORUS2 if domain is None else domain
    profile = ConnectionProfile() if profile is None else profile
    results = []

    t2 = mc_graph_table(2, domain, profile, s, trials, derive_seed(seed, 2), workers)
    p_edge = expected_edge_count(domain, profile, 2, s)
    results.append(CheckResult(
        "pair_table_vs_quadrature", bool(abs(t2.probabilities[1] - p_edge) <= 3 * t2.se[1]),
        float(t2.probabilities[1]), p_edge, 3 * float(t2.se[1])))

    h2rep = check_h2_inequality(10**5, derive_seed(seed, 100))
    results.append(CheckResult(
        "h2_difference_bound", h2rep.violations == 0, h2rep.max_excess, 0.0, 1e-12,
        f"{h2rep.violations} violations over {h2rep.trials} pairs"))

    table = mc_graph_table(n, domain, profile, s, trials, derive_seed(seed, n), workers)
    h, h_se = entropy_of_table(table, with_se=True)
    cond = conditional_entropy(domain, profile, n, s).bits
    results.append(CheckResult(
        "conditioning_reduces_entropy", bool(h - cond >= -4 * h_se), h - cond, 0.0, 4 * h_se,
        "H(G_n) - H(G_n|Z_n) >= -4 SE"))

    mean, mean_se = sampled_table_information(table, trials, derive_seed(seed, 200))
    tol = 3 * math.hypot(mean_se, h_se)
    results.append(CheckResult(
        "tiny_n_aep_mean", bool(abs(mean - h) <= tol), mean, h, tol,
        "mean of -log2 P(G) over sampled graphs vs table entropy"))

    sub_tables = {}
    for size in range(2, n):
        sub_tables[size] = mc_graph_table(size, domain, profile, s, trials, derive_seed(seed, 300 + size), workers)
    for size in range(2, n):
        ref, ref_se = entropy_of_table(sub_tables[size], with_se=True)
        for S in itertools.combinations(range(n), size):
            val, se = neighborhood_conditional_entropy(table, S, with_se=True)
            tol = 4 * math.hypot(se, ref_se)
            results.append(CheckResult(
                f"neighborhood_reduction_S={''.join(map(str, S))}", bool(abs(val - ref) <= tol),
                val, ref, tol, f"H(N_S|N_S^c) vs H(G_{size})"))
            val, se = within_conditional_entropy(table, S, with_se=True)
            tol = 4 * math.hypot(se, ref_se)
            results.append(CheckResult(
                f"within_reduction_S={''.join(map(str, S))}", bool(abs(val - ref) <= tol),
                val, ref, tol, f"H(inside S | inside S^c) vs H(G_{size})"))

    if n >= 3:
        t3 = sub_tables.get(3) or mc_graph_table(3, domain, profile, s, trials, derive_seed(seed, 303), workers)
        worst = 0.0
        ok = True
        for perm in itertools.permutations(range(3)):
            diff = np.abs(relabel_table(t3, perm) - t3.probabilities)
            lim = 4 * np.sqrt(2) * t3.se
            ok &= bool(np.all(diff <= lim + 1e-15))
            worst = max(worst, float((diff / np.maximum(lim, 1e-300)).max()))
        results.append(CheckResult("exchangeability_n3", ok, worst, 1.0, 1.0,
                                   "max |P(pi g) - P(g)| / (4 sqrt2 SE)"))
    return results
