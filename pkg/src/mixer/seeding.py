"""Reproducible replica streams.

Replica k of a run with master seed s uses a Philox generator keyed by the
128-bit value s + 2**64 k.  The map (s, k) -> key is injective, so streams are
distinct for every seed and replica index, and they do not depend on the
order in which replicas are scheduled.
"""
from __future__ import annotations

import numpy as np

_U64 = 1 << 64


def seed_stream(master_seed: int, replica_index: int) -> np.random.Generator:
    """Generator for one replica."""
    s, k = int(master_seed), int(replica_index)
    if not (0 <= s < _U64 and 0 <= k < _U64):
        raise ValueError("master_seed and replica_index must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=s + (k << 64)))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def draw_key(rng: np.random.Generator) -> int:
    """64-bit key for one call of a compiled kernel."""
    return int(rng.integers(0, _U64, dtype=np.uint64))
