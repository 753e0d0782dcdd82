"""Exact laws and transition kernels for tiny systems.

Random-cluster states are component-size partitions (descending tuples); the
CM and SW kernels act on them exactly because the complete graph is
symmetric.  Potts states are color-count vectors in colex order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .errors import DomainError, SizeError, SupportError

MAX_RC_N = 6
MAX_KERNEL_N = 4
MAX_BALANCE_N = 10
MAX_COUNT_STATES = 200_000


@dataclass(frozen=True)
class ExactDistribution:
    states: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (len(self.states),):
            raise ValueError("one probability per state")
        object.__setattr__(self, "probs", p)

    def prob(self, state) -> float:
        try:
            return float(self.probs[self.states.index(tuple(state))])
        except ValueError:
            return 0.0

    def as_dict(self) -> dict:
        return {tuple(s): float(p) for s, p in zip(self.states, self.probs)}

    def tv(self, other: "ExactDistribution") -> float:
        keys = set(self.states) | set(other.states)
        return 0.5 * sum(abs(self.prob(k) - other.prob(k)) for k in keys)

    def to_json(self) -> str:
        return json.dumps({"states": [list(s) for s in self.states],
                           "probs": [float(p) for p in self.probs]})

    @classmethod
    def from_json(cls, text: str) -> "ExactDistribution":
        d = json.loads(text)
        return cls(tuple(tuple(s) for s in d["states"]), np.array(d["probs"]))


# --------------------------------------------------------------------------
# Partitions and edge enumeration
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def partitions(n: int) -> tuple:
    """Integer partitions of n as descending tuples, in reverse lexicographic order."""
    def gen(m, cap):
        if m == 0:
            yield ()
            return
        for k in range(min(m, cap), 0, -1):
            for rest in gen(m - k, k):
                yield (k,) + rest
    return tuple(gen(n, n))


def _components(m: int, edges) -> tuple:
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    sizes = {}
    for v in range(m):
        r = find(v)
        sizes[r] = sizes.get(r, 0) + 1
    return tuple(sorted(sizes.values(), reverse=True))


@lru_cache(maxsize=None)
def _edge_census(m: int) -> dict:
    """{(partition, edge count): number of edge subsets of K_m}."""
    pairs = list(combinations(range(m), 2))
    out: dict = {}
    for mask in range(1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        key = (_components(m, edges), len(edges))
        out[key] = out.get(key, 0) + 1
    return out


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")


@lru_cache(maxsize=None)
def er_partition_law(m: int, p: float) -> dict:
    """Exact law of the component partition of G(m, p)."""
    if m == 0:
        return {(): 1.0}
    if m > MAX_RC_N:
        raise SizeError(f"m = {m} exceeds {MAX_RC_N}")
    _check_p(p)
    E = m * (m - 1) // 2
    law: dict = {}
    for (part, k), cnt in _edge_census(m).items():
        law[part] = law.get(part, 0.0) + cnt * p ** k * (1.0 - p) ** (E - k)
    return law


def rc_exact_stationary(n: int, p: float, q: float) -> ExactDistribution:
    """Random-cluster measure on K_n, pushed forward to component partitions."""
    if n < 1 or n > MAX_RC_N:
        raise SizeError(f"n must lie in 1..{MAX_RC_N}")
    if q <= 0:
        raise DomainError("q must be positive")
    _check_p(p)
    E = n * (n - 1) // 2
    w: dict = {}
    for (part, k), cnt in _edge_census(n).items():
        w[part] = w.get(part, 0.0) + cnt * p ** k * (1.0 - p) ** (E - k) * q ** len(part)
    states = partitions(n)
    probs = np.array([w.get(s, 0.0) for s in states])
    return ExactDistribution(states, probs / probs.sum())


def _merge(*parts) -> tuple:
    return tuple(sorted((x for part in parts for x in part), reverse=True))


# --------------------------------------------------------------------------
# CM / SW kernels on partitions
# --------------------------------------------------------------------------

def cm_kernel_matrix(n: int, beta: float, q: float, sw: bool = False):
    """(states, P) for the CM (or SW) chain on K_n with p = beta/n."""
    if n < 1 or n > MAX_KERNEL_N:
        raise SizeError(f"n must lie in 1..{MAX_KERNEL_N}")
    p = beta / n
    _check_p(p)
    if sw and (q != int(q) or q < 1):
        raise DomainError("SW needs integer q >= 1")
    states = partitions(n)
    index = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        if sw:
            qi = int(q)
            for colors in product(range(qi), repeat=len(s)):
                w = qi ** -len(s)
                laws = [er_partition_law(sum(c for c, col in zip(s, colors) if col == k), p)
                        for k in range(qi)]
                for combo in product(*(law.items() for law in laws)):
                    pr = w
                    for _, x in combo:
                        pr *= x
                    P[i, index[_merge(*(part for part, _ in combo))]] += pr
        else:
            a = 1.0 / q
            for act in product((0, 1), repeat=len(s)):
                k = sum(act)
                w = a ** k * (1.0 - a) ** (len(s) - k)
                A = sum(c for c, on in zip(s, act) if on)
                rest = tuple(c for c, on in zip(s, act) if not on)
                for part, x in er_partition_law(A, p).items():
                    P[i, index[_merge(rest, part)]] += w * x
    return states, P


def cm_exact_kernel_check(n: int, beta: float, q: float, sw: bool = False) -> float:
    """||mu P - mu||_1 for the random-cluster measure mu with p = beta/n."""
    states, P = cm_kernel_matrix(n, beta, q, sw)
    mu = rc_exact_stationary(n, beta / n, q)
    assert mu.states == states
    return float(np.abs(mu.probs @ P - mu.probs).sum())


def kernel_tv_curve(P: np.ndarray, start: int, pi: np.ndarray, T: int) -> np.ndarray:
    """TV(delta_start P^t, pi) for t = 0..T."""
    mu = np.zeros(P.shape[0])
    mu[start] = 1.0
    out = np.empty(T + 1)
    for t in range(T + 1):
        out[t] = 0.5 * np.abs(mu - pi).sum()
        mu = mu @ P
    return out


def partition_from_stats(n: int, L1: int, L2: int, R2_minus: int, R3_minus: int,
                         I1: int) -> tuple:
    """The unique partition of n with the given summary statistics."""
    hits = []
    for s in partitions(n):
        rest = s[1:]
        if (s[0], rest[0] if rest else 0, sum(x * x for x in rest),
                sum(x ** 3 for x in rest), s.count(1)) == (L1, L2, R2_minus, R3_minus, I1):
            hits.append(s)
    if len(hits) != 1:
        raise SupportError(f"statistics identify {len(hits)} partitions")
    return hits[0]


# --------------------------------------------------------------------------
# Potts counts
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def count_states(n: int, q: int) -> tuple:
    """Compositions of n into q parts in colex order."""
    def gen(m, k):
        if k == 1:
            yield (m,)
            return
        for first in range(m + 1):
            for rest in gen(m - first, k - 1):
                yield (first,) + rest
    return tuple(sorted(gen(n, q), key=lambda c: tuple(reversed(c))))


def potts_counts_stationary(n: int, q: int, beta: float) -> ExactDistribution:
    """Law of the color counts: multinomial(n; c) exp((beta/n) sum_j C(c_j, 2))."""
    if n < 1 or q < 2:
        raise DomainError("need n >= 1 and q >= 2")
    if math.comb(n + q - 1, q - 1) > MAX_COUNT_STATES:
        raise SizeError(f"count space of (n={n}, q={q}) exceeds {MAX_COUNT_STATES} states")
    states = count_states(n, q)
    logw = np.array([math.lgamma(n + 1) - sum(math.lgamma(c + 1) for c in s)
                     + beta / n * sum(c * (c - 1) / 2 for c in s) for s in states])
    w = np.exp(logw - logw.max())
    return ExactDistribution(states, w / w.sum())


def glauber_kernel_matrix(n: int, q: int, beta: float, self_exclusion: bool = True):
    """(states, P) for heat-bath Glauber on counts."""
    if n > MAX_BALANCE_N:
        raise SizeError(f"n must not exceed {MAX_BALANCE_N}")
    states = potts_counts_stationary(n, q, 0.0).states
    index = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        for k in range(q):
            if s[k] == 0:
                continue
            pk = s[k] / n
            w = np.array([math.exp(beta / n * (s[j] - (1 if self_exclusion and j == k else 0)))
                          for j in range(q)])
            w /= w.sum()
            for j in range(q):
                t = list(s)
                t[k] -= 1
                t[j] += 1
                P[i, index[tuple(t)]] += pk * w[j]
    return states, P


def glauber_balance_check(n: int, q: int, beta: float, self_exclusion: bool = True) -> float:
    """max_ij |pi_i P_ij - pi_j P_ji| for the count-vector Glauber chain."""
    states, P = glauber_kernel_matrix(n, q, beta, self_exclusion)
    pi = potts_counts_stationary(n, q, beta).probs
    flow = pi[:, None] * P
    return float(np.max(np.abs(flow - flow.T)))


# --------------------------------------------------------------------------
# Empirical total variation
# --------------------------------------------------------------------------

def empirical_tv(sampler, exact: ExactDistribution, t: int, replicas: int, rng,
                 threads: int | None = None) -> tuple[float, float]:
    """TV at time t of sampler(t, generator) -> state over independent replicas."""
    from .parallel import master_seed_from, run_replicas
    samples = run_replicas(lambda _, g: sampler(t, g), replicas, master_seed_from(rng), threads)
    return tv_from_samples(samples, exact)


def tv_from_samples(samples, exact: ExactDistribution) -> tuple[float, float]:
    """(TV, delta-method standard error) between a sample and an exact law.

    Unobserved support states contribute their full exact mass.
    """
    samples = [tuple(s) for s in samples]
    N = len(samples)
    if N == 0:
        raise DomainError("no samples")
    index = {s: i for i, s in enumerate(exact.states)}
    counts = np.zeros(len(exact.states))
    for s in samples:
        i = index.get(s)
        if i is None:
            raise SupportError(f"sample state {s} outside the exact support")
        counts[i] += 1
    phat = counts / N
    diff = phat - exact.probs
    tv = 0.5 * np.abs(diff).sum()
    g = 0.5 * np.sign(diff)
    var = (g * g * phat).sum() - (g * phat).sum() ** 2
    return float(tv), float(math.sqrt(max(var, 0.0) / N))
