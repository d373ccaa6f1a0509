"""Linear layout of unordered node pairs.

Pair (i, j) with i < j (0-based) lives at index ``j*(j-1)//2 + i``.  The order
is therefore (0,1), (0,2), (1,2), (0,3), (1,3), (2,3), ...  Graph bitmasks,
packed edge arrays and codebook hashes all use this layout.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(i: int, j: int) -> int:
    if i == j:
        raise ValueError("no self-pairs")
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


@lru_cache(maxsize=64)
def _pair_indices(n: int):
    jj, ii = [], []
    for j in range(1, n):
        for i in range(j):
            ii.append(i)
            jj.append(j)
    i_arr = np.array(ii, dtype=np.intp)
    j_arr = np.array(jj, dtype=np.intp)
    i_arr.flags.writeable = False
    j_arr.flags.writeable = False
    return i_arr, j_arr


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(i, j)`` of the endpoints of every pair, in layout order."""
    return _pair_indices(int(n))
