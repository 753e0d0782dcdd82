"""Erdos-Renyi component sampling and component statistics.

Only component sizes are ever materialized.  Edges of G(m, p) are visited by
geometric jumps over the pair index, so the work is proportional to the
number of edges rather than m^2, and components are merged with a union-find.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .seeding import as_generator, draw_key


class ComponentMultiset:
    """Immutable multiset of component sizes, stored in descending order."""

    __slots__ = ("_sizes",)

    def __init__(self, sizes):
        arr = np.sort(np.asarray(sizes, dtype=np.int64).ravel())[::-1].copy()
        if arr.size and arr[-1] < 1:
            raise ValueError("component sizes must be positive")
        arr.setflags(write=False)
        self._sizes = arr

    @property
    def sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def total(self) -> int:
        return int(self._sizes.sum())

    def __len__(self) -> int:
        return self._sizes.size

    def __eq__(self, other) -> bool:
        return isinstance(other, ComponentMultiset) and np.array_equal(self._sizes, other._sizes)

    def __hash__(self) -> int:
        return hash(self._sizes.tobytes())

    def as_tuple(self) -> tuple:
        return tuple(int(x) for x in self._sizes)

    def __repr__(self) -> str:
        if len(self) <= 8:
            return f"ComponentMultiset({list(self.as_tuple())})"
        return f"ComponentMultiset(total={self.total}, components={len(self)}, L1={self._sizes[0]})"

    @classmethod
    def singletons(cls, m: int) -> "ComponentMultiset":
        return cls(np.ones(m, dtype=np.int64))


@dataclass(frozen=True)
class ComponentStats:
    L1: int
    L2: int
    R2: int
    R2_minus: int
    R3: int
    R3_minus: int
    I1: int


def sample_er_components(m: int, p: float, rng) -> ComponentMultiset:
    """Component multiset of G(m, p)."""
    if m < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("need m >= 0 and 0 <= p <= 1")
    rng = as_generator(rng)
    return ComponentMultiset(_backend.er_components(int(m), float(p), draw_key(rng)))


def component_stats(cm: ComponentMultiset) -> ComponentStats:
    s = cm.sizes
    if s.size == 0:
        return ComponentStats(0, 0, 0, 0, 0, 0, 0)
    l1 = int(s[0])
    l2 = int(s[1]) if s.size > 1 else 0
    r2 = int(np.dot(s, s))
    r3 = int(np.dot(s, s * s))
    return ComponentStats(l1, l2, r2, r2 - l1 * l1, r3, r3 - l1 ** 3, int(np.count_nonzero(s == 1)))


def mc_R2_density(m: int, p: float, replicas: int, rng) -> tuple[float, float]:
    """Monte Carlo E[R2]/m (subcritical) or E[R2^-]/m (supercritical), with standard error."""
    if replicas < 2:
        raise ValueError("need at least two replicas")
    rng = as_generator(rng)
    giant = m * p > 1.0
    vals = np.empty(replicas)
    for r in range(replicas):
        st = component_stats(sample_er_components(m, p, rng))
        vals[r] = (st.R2_minus if giant else st.R2) / m
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(replicas))


def survivors_after_rounds(cm: ComponentMultiset, r: int, q: float, rng) -> ComponentMultiset:
    """Components that stay inactive through r activation rounds, each w.p. (1 - 1/q)^r."""
    if r < 0 or not q > 1.0:
        raise ValueError("need r >= 0 and q > 1")
    if r == 0:
        return cm
    rng = as_generator(rng)
    keep = rng.random(len(cm)) < (1.0 - 1.0 / q) ** r
    return ComponentMultiset(cm.sizes[keep])
