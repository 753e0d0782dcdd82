"""Replica fan-out over a thread pool.

Kernels release the GIL, so threads give real parallelism.  Each replica gets
its own stream from (master_seed, index), and results come back in index
order, so output does not depend on the number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .seeding import draw_key, seed_stream

T = TypeVar("T")


def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("MIXER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def master_seed_from(rng_or_seed) -> int:
    """A Generator contributes one 64-bit draw; an int is used as is."""
    if isinstance(rng_or_seed, np.random.Generator):
        return draw_key(rng_or_seed)
    if rng_or_seed is None:
        raise ValueError("a seed or generator is required")
    return int(rng_or_seed)


def run_replicas(fn: Callable[[int, np.random.Generator], T], replicas: int,
                 master_seed: int, threads: int | None = None,
                 indices: Sequence[int] | None = None) -> list[T]:
    """Evaluate fn(k, seed_stream(master_seed, k)) for each replica index k."""
    idx = list(range(replicas)) if indices is None else list(indices)
    work = lambda k: fn(k, seed_stream(master_seed, k))
    nt = min(thread_count(threads), max(1, len(idx)))
    if nt == 1:
        return [work(k) for k in idx]
    with ThreadPoolExecutor(max_workers=nt) as pool:
        return list(pool.map(work, idx))
