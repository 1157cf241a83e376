"""Small numeric helpers used in several modules."""

import numpy as np


def popcount(a: np.ndarray) -> np.ndarray:
    """Per-element number of set bits, as int64 (safe for weighted dot products)."""
    return np.bitwise_count(np.ascontiguousarray(a, dtype=np.uint64)).astype(np.int64)


def scatter_bits(value: int, positions) -> int:
    """Move bit i of ``value`` to ``positions[i]``; bits beyond len(positions) must be 0."""
    out = 0
    for i, p in enumerate(positions):
        out |= ((value >> i) & 1) << p
    return out
