"""Counter-based random streams.

Every random quantity in the package is drawn from a Philox generator keyed by
an unsigned 64-bit seed.  Per-trial seeds are derived from a master seed and the
trial coordinates, so results never depend on how trials are scheduled.
"""
from __future__ import annotations

import numpy as np

U64_MASK = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & U64_MASK))


def derive_seed(master: int, *path: int) -> int:
    """Deterministic u64 seed for the stream at ``path`` below ``master``."""
    ss = np.random.SeedSequence([int(master) & U64_MASK, *(int(p) for p in path)])
    return int(ss.generate_state(1, np.uint64)[0])
