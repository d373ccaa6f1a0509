"""SRGG realizations, their text file format, and edge-count moments."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .connection import ConnectionProfile, eval_p
from .errors import DomainError, SrggError
from .geometry import DomainSpec, integrate_radial, pairwise_distances
from .pairs import num_pairs, pair_index, pair_indices
from .rng import U64_MASK, make_rng


@dataclass(frozen=True, eq=False)
class Srgg:
    """One graph on ``n`` nodes plus the positions that generated it.

    ``edges`` is the packed (little bit order) indicator vector over pairs in
    the layout of :mod:`srgg.pairs`.
    """

    n: int
    edges: np.ndarray
    positions: np.ndarray
    domain: DomainSpec
    profile: str = "rayleigh"
    s: float = 1.0
    seed: int = 0
    _bits: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.positions.shape != (self.n, self.domain.d):
            raise SrggError("positions do not match n and d")
        bits = np.unpackbits(self.edges, count=num_pairs(self.n), bitorder="little").astype(bool)
        bits.flags.writeable = False
        object.__setattr__(self, "_bits", bits)

    @classmethod
    def from_bits(cls, bits, positions, domain, profile="rayleigh", s=1.0, seed=0):
        bits = np.asarray(bits, dtype=bool)
        packed = np.packbits(bits, bitorder="little")
        return cls(len(positions), packed, np.asarray(positions, dtype=float), domain, profile, s, seed)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def num_edges(self) -> int:
        return int(self._bits.sum())

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._bits[pair_index(i, j)])

    def edge_list(self) -> list[tuple[int, int]]:
        i, j = pair_indices(self.n)
        sel = self._bits
        return list(zip(i[sel].tolist(), j[sel].tolist()))

    def mask(self) -> int:
        """The graph as an integer whose bit k is the indicator of pair k."""
        return int(sum(1 << k for k in np.flatnonzero(self._bits).tolist()))

    def distances(self) -> np.ndarray:
        return pairwise_distances(self.domain, self.positions)

    def __eq__(self, other):
        if not isinstance(other, Srgg):
            return NotImplemented
        return (
            self.n == other.n
            and self.domain == other.domain
            and self.profile == other.profile
            and self.s == other.s
            and self.seed == other.seed
            and np.array_equal(self._bits, other._bits)
            and np.array_equal(self.positions, other.positions)
        )


def draw_graph(n, domain, profile, s, rng):
    """Positions then pair indicators, both drawn from ``rng`` in fixed order."""
    positions = rng.random((n, domain.d))
    m = num_pairs(n)
    if m == 0:
        return positions, np.zeros(0, dtype=bool)
    u = rng.random(m)
    return positions, u < profile(pairwise_distances(domain, positions) / s)


def sample_srgg(n: int, domain: DomainSpec, profile: ConnectionProfile, s: float, seed: int) -> Srgg:
    if n < 1:
        raise DomainError("an SRGG needs at least one node")
    if s <= 0:
        raise DomainError("sparsity must be positive")
    seed = int(seed) & U64_MASK
    positions, bits = draw_graph(n, domain, profile, s, make_rng(seed))
    return Srgg.from_bits(bits, positions, domain, profile.name, float(s), seed)


def expected_edge_count(domain: DomainSpec, profile: ConnectionProfile, n: int, s: float) -> float:
    """C(n,2) times the edge probability of a single pair, by quadrature."""
    if n < 2:
        raise DomainError("need n >= 2")
    per_pair, _ = integrate_radial(domain, lambda r: eval_p(profile, r, s), scale=s)
    return num_pairs(n) * per_pair


# File format -----------------------------------------------------------------

def write_graph(graph: Srgg, fh) -> None:
    """Write ``graph`` in the ``srgg v1`` text format to a path or text stream."""
    if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
        with open(fh, "w", encoding="ascii", newline="\n") as f:
            write_graph(graph, f)
        return
    fh.write(
        f"srgg v1 n={graph.n} d={graph.domain.d} s={graph.s!r} "
        f"profile={graph.profile} seed={graph.seed} domain={graph.domain.name}\n"
    )
    for i, row in enumerate(graph.positions):
        fh.write("v " + str(i) + "".join(" " + repr(float(x)) for x in row) + "\n")
    for i, j in graph.edge_list():
        fh.write(f"e {i} {j}\n")


def read_graph(fh) -> Srgg:
    if isinstance(fh, (str, bytes)) or hasattr(fh, "__fspath__"):
        with open(fh, encoding="ascii") as f:
            return read_graph(f)
    header = fh.readline().split()
    if header[:2] != ["srgg", "v1"]:
        raise SrggError("not an srgg v1 file")
    meta = dict(tok.split("=", 1) for tok in header[2:])
    n, d = int(meta["n"]), int(meta["d"])
    domain = DomainSpec.from_name(meta["domain"]) if "domain" in meta else DomainSpec(d)
    if domain.d != d:
        raise SrggError("header dimension disagrees with domain")
    positions = np.zeros((n, d))
    bits = np.zeros(num_pairs(n), dtype=bool)
    seen = np.zeros(n, dtype=bool)
    for line in fh:
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "v":
            i = int(tok[1])
            positions[i] = [float(x) for x in tok[2:]]
            seen[i] = True
        elif tok[0] == "e":
            i, j = int(tok[1]), int(tok[2])
            if not 0 <= i < j < n:
                raise SrggError(f"bad edge line {line!r}")
            bits[pair_index(i, j)] = True
        else:
            raise SrggError(f"unrecognised line {line!r}")
    if not seen.all():
        raise SrggError("missing node lines")
    return Srgg.from_bits(bits, positions, domain, meta["profile"], float(meta["s"]), int(meta["seed"]))


def dumps(graph: Srgg) -> str:
    buf = io.StringIO()
    write_graph(graph, buf)
    return buf.getvalue()


def loads(text: str) -> Srgg:
    return read_graph(io.StringIO(text))
