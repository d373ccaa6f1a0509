"""Distributed compression of an SRGG by random binning.

Node blocks are encoded independently: encoder l sees every pair indicator
touching its block and sends a hashed bin index.  The decoder searches all
graphs for the unique one that matches every bin and is typical for every
nonempty set of blocks.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from concurrent.futures import ProcessPoolExecutor
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.stats import binomtest

from .connection import LOG2E, ConnectionProfile, SparsitySchedule
from .errors import ConfigError, DomainError, SizeError
from .geometry import DomainSpec, pairwise_distances
from .infotheory import conditional_entropy, h_star
from .pairs import num_pairs, pair_indices
from .rng import derive_seed
from .sampler import Srgg, sample_srgg

MAX_DECODE_NODES = 7
_CHUNK = 1 << 15
_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


# Blocks ------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockPartition:
    """Consecutive node blocks; block l holds nodes [l n/L, (l+1) n/L)."""

    n: int
    L: int

    def __post_init__(self):
        if self.L < 1 or self.n < 1:
            raise ConfigError("need n >= 1 and L >= 1")
        if self.n % self.L:
            raise ConfigError(f"L={self.L} must divide n={self.n}")

    @property
    def size(self) -> int:
        return self.n // self.L

    def nodes(self, l: int) -> range:
        self._check(l)
        return range(l * self.size, (l + 1) * self.size)

    def block_of(self, node):
        return np.asarray(node) // self.size

    def pairs(self, l: int) -> np.ndarray:
        """Layout indices of every pair with an endpoint in block l, ascending."""
        self._check(l)
        i, j = pair_indices(self.n)
        return np.flatnonzero((self.block_of(i) == l) | (self.block_of(j) == l))

    def subset_nodes(self, mask: int) -> list[int]:
        return [v for l in range(self.L) if mask >> l & 1 for v in self.nodes(l)]

    def _check(self, l):
        if not 0 <= l < self.L:
            raise DomainError(f"block index {l} outside [0, {self.L})")


def extract_block(graph: Srgg, partition: BlockPartition, l: int) -> np.ndarray:
    """Indicators of the pairs touching block l, in pair-layout order."""
    if graph.n != partition.n:
        raise DomainError("partition does not match graph size")
    return graph.bits[partition.pairs(l)].astype(np.uint8)


# Codebooks -------------------------------------------------------------------

def _mix(z):
    """splitmix64 finalizer on uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _words(block) -> np.ndarray:
    bits = np.asarray(block, dtype=np.uint64).ravel()
    nwords = max(1, -(-len(bits) // 64))
    out = np.zeros(nwords, dtype=np.uint64)
    for k, b in enumerate(bits):
        if b:
            out[k // 64] |= np.uint64(1) << np.uint64(k % 64)
    return out


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class BinningCodebook:
    """Lazily realised random codebook: block strings are hashed with a keyed
    64-bit mixer, and the top ``bits[l]`` bits form the index.  When the index
    is at least as wide as the block string, the index is the block string
    XOR a keyed pad instead, which is injective."""

    rates: tuple
    bits: tuple
    block_length: tuple
    key: int

    def __post_init__(self):
        if any(b < 0 or b > 62 for b in self.bits):
            raise ConfigError(f"index widths must lie in [0, 62], got {self.bits}")

    def injective(self, l: int) -> bool:
        return self.bits[l] >= self.block_length[l]


def codebook_bits(rate: float, n: int, L: int, s: float, d: int) -> int:
    """Index width round_half_up(n (n-1) s^d R / L)."""
    if rate < 0:
        raise ConfigError("rates must be nonnegative")
    return round_half_up(n * (n - 1) * s**d * rate / L)


def make_codebook(rates, partition: BlockPartition, s: float, d: int, key: int) -> BinningCodebook:
    rates = tuple(float(r) for r in rates)
    if len(rates) != partition.L:
        raise ConfigError("need one rate per block")
    bits = tuple(codebook_bits(r, partition.n, partition.L, s, d) for r in rates)
    lengths = tuple(len(partition.pairs(l)) for l in range(partition.L))
    return BinningCodebook(rates, bits, lengths, int(key) & 0xFFFFFFFFFFFFFFFF)


def _prefix(codebook, l):
    return _mix(_mix(np.uint64(codebook.key)) ^ np.uint64(l))


def _hash_words(codebook, l, words, length):
    # words: (..., nwords) uint64
    h = np.broadcast_to(_prefix(codebook, l), words.shape[:-1]).copy()
    for w in range(words.shape[-1]):
        h = _mix(h ^ words[..., w])
    return _mix(h ^ np.uint64(length))


def _index_from_values(codebook, l, values):
    """Indices for block strings given as integers (block length <= 64)."""
    values = np.asarray(values, dtype=np.uint64)
    b = codebook.bits[l]
    length = codebook.block_length[l]
    if b == 0:
        return np.zeros(values.shape, dtype=np.uint64)
    if codebook.injective(l):
        pad = _mix(_prefix(codebook, l) ^ np.uint64(0xA5A5A5A5A5A5A5A5))
        mask = np.uint64((1 << length) - 1) if length < 64 else _M64
        return values ^ (pad & mask)
    h = _hash_words(codebook, l, values[..., None], length)
    return h >> np.uint64(64 - b)


def bin_index(codebook: BinningCodebook, l: int, block) -> int:
    """Bin index of one block string (a 0/1 sequence)."""
    block = np.asarray(block, dtype=np.uint8).ravel()
    if len(block) != codebook.block_length[l]:
        raise DomainError("block string has the wrong length")
    b = codebook.bits[l]
    if b == 0:
        return 0
    words = _words(block)
    if codebook.injective(l) or len(block) <= 64:
        return int(_index_from_values(codebook, l, words[0]))
    h = _hash_words(codebook, l, words[None, :], len(block))[0]
    return int(h >> np.uint64(64 - b))


def encode(graph: Srgg, partition: BlockPartition, codebook: BinningCodebook) -> list[int]:
    return [bin_index(codebook, l, extract_block(graph, partition, l)) for l in range(partition.L)]


# Rate region -----------------------------------------------------------------

def _subset_size(subset, L):
    members = sorted(set(int(l) for l in subset))
    if not members:
        raise DomainError("subset of blocks must be nonempty")
    if members[0] < 0 or members[-1] >= L:
        raise DomainError("block index out of range")
    return len(members)


def rate_bound(L: int, subset, schedule: SparsitySchedule, hstar: float) -> float:
    """Minimum total rate of the blocks in ``subset``:
    (|subset|/L) (h*/2) lim s(|subset| n / L)^d / s(n)^d = (|subset|/L)^(1 - beta d) h*/2."""
    k = _subset_size(subset, L)
    bd = schedule.beta * schedule.d
    if not 0.0 < bd < 1.0:
        raise ConfigError("need 0 < beta*d < 1")
    return (k / L) ** (1.0 - bd) * hstar / 2.0


def mask_members(mask: int, L: int) -> list[int]:
    return [l for l in range(L) if mask >> l & 1]


def rate_region(L: int, schedule: SparsitySchedule, hstar: float) -> list[tuple[int, float]]:
    """(subset_mask, bound) for all nonempty subsets."""
    return [(mask, rate_bound(L, mask_members(mask, L), schedule, hstar)) for mask in range(1, 1 << L)]


@dataclass(frozen=True)
class Violation:
    mask: int
    required: float
    provided: float

    @property
    def deficit(self) -> float:
        return self.required - self.provided


def is_achievable(rates, L: int, schedule: SparsitySchedule, hstar: float):
    """(achievable, most violated constraint or None) over all 2^L - 1 subsets."""
    rates = [float(r) for r in rates]
    if len(rates) != L or any(r < 0 for r in rates):
        raise ConfigError("need L nonnegative rates")
    worst = None
    for mask, bound in rate_region(L, schedule, hstar):
        provided = sum(rates[l] for l in mask_members(mask, L))
        if provided < bound * (1 - 1e-12):
            v = Violation(mask, bound, provided)
            if worst is None or v.deficit > worst.deficit:
                worst = v
    return worst is None, worst


# Decoding --------------------------------------------------------------------

DECODED, ATYPICAL, COLLISION, NO_CANDIDATE = "decoded", "atypical-source", "collision", "no-candidate"


@dataclass
class DecodeOutcome:
    status: str
    graph: int | None = None        # decoded graph as a pair bitmask
    candidates: int = 0


class _Enumeration:
    """Per-(n, L) tables shared by every decode: block values of all graphs and
    the pair masks of each block subset."""

    _cache: dict = {}

    def __new__(cls, partition):
        key = (partition.n, partition.L)
        if key not in cls._cache:
            obj = super().__new__(cls)
            obj._build(partition)
            cls._cache[key] = obj
        return cls._cache[key]

    def _build(self, partition):
        n, L = partition.n, partition.L
        self.m = m = num_pairs(n)
        self.graphs = np.arange(1 << m, dtype=np.int64)
        self.block_pairs = [partition.pairs(l) for l in range(L)]
        self.block_values = []
        for pairs in self.block_pairs:
            v = np.zeros(len(self.graphs), dtype=np.uint64)
            for pos, k in enumerate(pairs):
                v |= ((self.graphs >> k) & 1).astype(np.uint64) << np.uint64(pos)
            self.block_values.append(v)
        i, j = pair_indices(n)
        bi, bj = partition.block_of(i), partition.block_of(j)
        self.subsets = []
        for mask in range(1, 1 << L):
            inside = np.array([(mask >> a & 1) and (mask >> b & 1) for a, b in zip(bi, bj)], dtype=bool)
            touch_c = np.array([not (mask >> a & 1) or not (mask >> b & 1) for a, b in zip(bi, bj)], dtype=bool)
            size = len(partition.subset_nodes(mask))
            comp_mask = int(sum(1 << int(k) for k in np.flatnonzero(touch_c)))
            self.subsets.append((mask, inside, num_pairs(size), comp_mask))
        self.bit_matrix = ((self.graphs[:, None] >> np.arange(m)) & 1).astype(bool)


def _pair_info(profile, dist, s):
    lp, lq = profile.log_p(dist / s)
    return -lq * LOG2E, -lp * LOG2E  # info of a non-edge, info of an edge


def _subset_information(enum, info0, info1, table=None):
    """For each subset mask: array over all graphs of
    -log2 P(blocks in subset | blocks outside subset)."""
    out = {}
    if table is None:
        base = info0.sum()
        delta = info1 - info0
        with np.errstate(invalid="ignore"):
            for mask, inside, _, _ in enum.subsets:
                d = np.where(inside, delta, 0.0)
                b = np.where(inside, info0, 0.0).sum()
                # inf - inf cannot occur: a pair has at most one infinite branch
                vals = np.where(enum.bit_matrix[:, inside], info1[inside], info0[inside]).sum(axis=1) if np.any(np.isinf(d)) \
                    else b + enum.bit_matrix.astype(float) @ d
                out[mask] = vals
        return out
    from .oracle import _marginal
    with np.errstate(divide="ignore"):
        joint = -np.log2(table.probabilities)
        for mask, inside, _, comp_mask in enum.subsets:
            keep = [k for k in range(enum.m) if comp_mask >> k & 1]
            probs, cell = _marginal(table, keep)
            out[mask] = joint + np.log2(probs[cell])
    return out


def typicality(enum, info, s, d, center, epsilon):
    """Boolean arrays (over all graphs) of typicality per subset mask."""
    result = {}
    for mask, _, pairs, _ in enum.subsets:
        if pairs == 0:
            result[mask] = np.ones(len(enum.graphs), dtype=bool)
            continue
        vals = info[mask] / (pairs * s**d)
        with np.errstate(invalid="ignore"):
            result[mask] = np.isfinite(vals) & (np.abs(vals - center) <= epsilon)
    return result


def decode(indices, codebook: BinningCodebook, partition: BlockPartition, epsilon: float, center: float,
           *, positions=None, domain: DomainSpec | None = None, profile: ConnectionProfile | None = None,
           s: float | None = None, table=None) -> DecodeOutcome:
    """Typical-set decoder.

    Genie mode (default) takes ``positions``, ``domain``, ``profile`` and ``s``
    and uses position-conditional probabilities.  Marginal mode takes an
    oracle ``table`` (n <= 5) and uses the estimated marginal law.
    """
    n = partition.n
    if n > MAX_DECODE_NODES:
        raise SizeError(f"candidate enumeration is limited to n <= {MAX_DECODE_NODES}")
    enum = _Enumeration(partition)
    if table is None:
        if positions is None or domain is None or profile is None or s is None:
            raise ConfigError("genie decoding needs positions, domain, profile and s")
        d = domain.d
        info0, info1 = _pair_info(profile, pairwise_distances(domain, positions), s)
        info = _subset_information(enum, info0, info1)
    else:
        if table.n != n:
            raise ConfigError("table size does not match partition")
        d = table.domain.d
        s = table.s
        info = _subset_information(enum, None, None, table)
    typical = typicality(enum, info, s, d, center, epsilon)
    return _search(enum, codebook, indices, typical)


def _bin_match(enum, codebook, indices):
    match = np.ones(len(enum.graphs), dtype=bool)
    for l, idx in enumerate(indices):
        match &= _index_from_values(codebook, l, enum.block_values[l]) == np.uint64(idx)
    return match


def _search(enum, codebook, indices, typical):
    ok = _bin_match(enum, codebook, indices)
    for t in typical.values():
        ok &= t
    found = np.flatnonzero(ok)
    if len(found) == 0:
        return DecodeOutcome(NO_CANDIDATE, None, 0)
    if len(found) == 1:
        return DecodeOutcome(DECODED, int(found[0]), 1)
    return DecodeOutcome(COLLISION, None, int(len(found)))


# Simulation ------------------------------------------------------------------

@dataclass(frozen=True)
class DscConfig:
    n: int = 6
    L: int = 2
    domain: DomainSpec = DomainSpec(2, "torus")
    profile: ConnectionProfile = ConnectionProfile()
    schedule: SparsitySchedule = SparsitySchedule(0.6, 0.25, 2)
    rates: tuple | None = None          # base tuple; default: symmetric corner of the region
    gammas: tuple = (0.25, 0.5, 1.0, 2.0)
    epsilon: float = 0.8
    center: str = "hstar"               # "hstar" or "finite"
    trials: int = 1000
    seed: int = 0
    mode: str = "genie"                 # "genie" or "marginal"
    table_trials: int = 10**5

    @property
    def s(self) -> float:
        return self.schedule(self.n)


def symmetric_rates(L, schedule, hstar, factor=1.0):
    """Smallest equal rate tuple inside the region, times ``factor``."""
    need = max(bound / len(mask_members(mask, L)) for mask, bound in rate_region(L, schedule, hstar))
    return tuple(factor * need for _ in range(L))


def typicality_center(config: DscConfig, hstar: float) -> float:
    if config.center == "hstar":
        return hstar
    if config.center == "finite":
        return conditional_entropy(config.domain, config.profile, 2, config.s).normalized
    raise ConfigError(f"unknown typicality center {config.center!r}")


@dataclass
class TrialRecord:
    trial: int
    gamma: float
    outcome: str
    atypical: bool
    collision: bool
    seed: int
    union_bound: float

    @property
    def error(self) -> bool:
        return self.outcome != DECODED


def _run_trial(args):
    config, t, hstar, center, base_rates, table = args
    enum = _Enumeration(BlockPartition(config.n, config.L))
    partition = BlockPartition(config.n, config.L)
    s, d = config.s, config.domain.d
    gseed = derive_seed(config.seed, t, 0)
    key = derive_seed(config.seed, t, 1)
    graph = sample_srgg(config.n, config.domain, config.profile, s, gseed)
    truth = graph.mask()
    if table is None:
        info0, info1 = _pair_info(config.profile, graph.distances(), s)
        info = _subset_information(enum, info0, info1)
    else:
        info = _subset_information(enum, None, None, table)
    typical = typicality(enum, info, s, d, center, config.epsilon)
    all_typical = np.ones(len(enum.graphs), dtype=bool)
    for arr in typical.values():
        all_typical &= arr
    source_typical = bool(all_typical[truth])
    # alternatives that agree with the truth outside each subset and are typical there
    alt_counts = {}
    for mask, _, _, comp_mask in enum.subsets:
        agree = ((enum.graphs ^ truth) & comp_mask) == 0
        alt_counts[mask] = int(np.count_nonzero(agree & typical[mask])) - int(typical[mask][truth])
    records = []
    for gamma in config.gammas:
        codebook = make_codebook([gamma * r for r in base_rates], partition, s, d, key)
        indices = encode(graph, partition, codebook)
        out = _search(enum, codebook, indices, typical)
        if not source_typical:
            outcome = ATYPICAL
        elif out.status == DECODED and out.graph == truth:
            outcome = DECODED
        else:
            outcome = out.status
        bound = 0.0
        for mask, _, _, _ in enum.subsets:
            b = sum(codebook.bits[l] for l in mask_members(mask, config.L))
            if not all(codebook.injective(l) for l in mask_members(mask, config.L)):
                bound += alt_counts[mask] * 2.0 ** (-b)
        records.append(TrialRecord(t, gamma, outcome, not source_typical, out.status == COLLISION, gseed, bound))
    return records


@dataclass
class GammaSummary:
    gamma: float
    trials: int
    errors: int
    atypical: int
    collisions: int
    union_bound: float
    bits: tuple

    @property
    def p_error(self) -> float:
        return self.errors / self.trials

    def ci(self, level=0.95):
        c = binomtest(self.errors, self.trials).proportion_ci(level, method="wilson")
        return float(c.low), float(c.high)

    def collision_ci(self, level=0.95):
        c = binomtest(self.collisions, self.trials).proportion_ci(level, method="wilson")
        return float(c.low), float(c.high)


@dataclass
class DscResult:
    config: DscConfig
    hstar: float
    center: float
    base_rates: tuple
    records: list = field(repr=False)
    summaries: list = field(default_factory=list)

    def summary(self, gamma) -> GammaSummary:
        return next(sm for sm in self.summaries if sm.gamma == gamma)


def simulate_dsc(config: DscConfig, workers: int = 1) -> DscResult:
    """Monte-Carlo error probability of the binning scheme for each rate scale.

    Trial t draws its graph from ``derive_seed(seed, t, 0)`` and its codebook
    key from ``derive_seed(seed, t, 1)``; every rate scale reuses both, so the
    comparison across scales is paired.
    """
    partition = BlockPartition(config.n, config.L)
    if config.n > MAX_DECODE_NODES:
        raise SizeError(f"candidate enumeration is limited to n <= {MAX_DECODE_NODES}")
    hstar = h_star(config.profile, config.domain.d)
    center = typicality_center(config, hstar)
    base = tuple(config.rates) if config.rates is not None else symmetric_rates(config.L, config.schedule, hstar)
    if len(base) != config.L:
        raise ConfigError("need one base rate per block")
    table = None
    if config.mode == "marginal":
        from .oracle import mc_graph_table
        table = mc_graph_table(config.n, config.domain, config.profile, config.s, config.table_trials,
                               derive_seed(config.seed, 1 << 32), workers)
    elif config.mode != "genie":
        raise ConfigError(f"unknown decoder mode {config.mode!r}")
    jobs = [(config, t, hstar, center, base, table) for t in range(config.trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            chunks = list(ex.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        chunks = [_run_trial(j) for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (config.gammas.index(r.gamma), r.trial))
    summaries = []
    for gamma in config.gammas:
        rows = [r for r in records if r.gamma == gamma]
        cb = make_codebook([gamma * r for r in base], partition, config.s, config.domain.d, 0)
        summaries.append(GammaSummary(
            gamma, len(rows), sum(r.error for r in rows), sum(r.atypical for r in rows),
            sum(r.collision for r in rows), float(np.mean([r.union_bound for r in rows])), cb.bits))
    return DscResult(config, hstar, center, base, records, summaries)
