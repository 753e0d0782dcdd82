"""Heat-bath Glauber dynamics of the mean-field Potts model on color counts.

On the complete graph the count vector is an exact Markov chain: a uniformly
chosen vertex of color k is recolored j with probability proportional to
exp((beta/n)(c_j - 1{j = k})), i.e. conditioned on the other n - 1 spins.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError, SimplexError
from .phase_diagram import PottsThresholds, vector_drift
from .seeding import as_generator, draw_key


@dataclass(frozen=True)
class CountVector:
    counts: tuple

    def __post_init__(self):
        c = tuple(int(x) for x in self.counts)
        if any(x < 0 for x in c) or not c:
            raise ValueError("counts must be nonnegative and nonempty")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def q(self) -> int:
        return len(self.counts)

    def proportions(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class PottsPhase:
    """Disordered, OrderedColor(i) or Unsettled.

    `color` is the 0-based coordinate; labels number colors 1..q.
    """

    kind: str
    color: int | None = None

    def __str__(self) -> str:
        return f"OrderedColor({self.color + 1})" if self.kind == "OrderedColor" else self.kind

    @property
    def settled(self) -> bool:
        return self.kind != "Unsettled"


DISORDERED = PottsPhase("Disordered")
UNSETTLED = PottsPhase("Unsettled")


def ordered(color: int) -> PottsPhase:
    return PottsPhase("OrderedColor", int(color))


@dataclass
class PottsTrajectory:
    """Counts recorded every `stride` steps, with an event log of hitting times."""

    n: int
    stride: int
    t: np.ndarray
    counts: np.ndarray
    events: dict = field(default_factory=dict)


def _as_counts(counts) -> np.ndarray:
    if isinstance(counts, CountVector):
        return counts.as_array()
    return np.array(counts, dtype=np.int64)


def exp_table(n: int, beta: float) -> np.ndarray:
    """exp(beta c / n) for c = 0..n."""
    return np.exp(beta * np.arange(n + 1, dtype=np.float64) / n)


def init_hat_nu(n: int, q: int, m0: float, rng) -> tuple[CountVector, int]:
    """Product initialization: a uniform dominant color with proportion m0 in expectation."""
    if not 1.0 / q - 1e-15 <= m0 <= 1.0:
        raise DomainError(f"m0 must lie in [1/q, 1], got {m0}")
    rng = as_generator(rng)
    dom = int(rng.integers(q))
    probs = np.full(q, (1.0 - m0) / (q - 1))
    probs[dom] = m0
    probs /= probs.sum()
    return CountVector(tuple(rng.multinomial(n, probs))), dom


def run_glauber(counts, beta: float, steps: int, rng, dom: int = 0,
                window: tuple[float, float] | None = None, track_gap: bool = False,
                table: np.ndarray | None = None):
    """Run up to `steps` Glauber steps.

    `window` = (lo, hi) bounds the dominant count; the run stops the first
    time counts[dom] < lo or > hi.  Returns (CountVector, steps done, exit
    code, max gap among non-dominant counts).
    """
    rng = as_generator(rng)
    c = _as_counts(counts)
    n = int(c.sum())
    tab = exp_table(n, beta) if table is None else table
    lo, hi = window if window is not None else (-math.inf, math.inf)
    done, code, gap = _backend.glauber_run(c, tab, int(steps), draw_key(rng), int(dom),
                                           float(lo), float(hi), bool(track_gap))
    return CountVector(tuple(c)), int(done), int(code), int(gap)


def glauber_step(counts, beta: float, rng) -> CountVector:
    """One heat-bath update."""
    return run_glauber(counts, beta, 1, rng)[0]


def glauber_trajectory(counts, beta: float, steps: int, rng, stride: int | None = None) -> PottsTrajectory:
    """Record counts every `stride` steps (default n)."""
    rng = as_generator(rng)
    c = _as_counts(counts)
    n = int(c.sum())
    stride = n if stride is None else int(stride)
    tab = exp_table(n, beta)
    ts, rows = [0], [c.copy()]
    t = 0
    while t < steps:
        k = min(stride, steps - t)
        cv, _, _, _ = run_glauber(c, beta, k, rng, table=tab)
        c = cv.as_array()
        t += k
        ts.append(t)
        rows.append(c.copy())
    return PottsTrajectory(n, stride, np.array(ts), np.array(rows))


def saddle_window(m_star: float, gamma: float, n: int) -> tuple[float, float]:
    """Dominant-count bounds n m_* -/+ gamma sqrt(n)."""
    return n * m_star - gamma * math.sqrt(n), n * m_star + gamma * math.sqrt(n)


def saddle_exit_times_potts(path, m_star: float, gamma: float, n: int):
    """First indices where the dominant proportion path leaves m_* +/- gamma/sqrt(n).

    `path` holds S_{t,1} per step.  Returns (tau_plus, tau_minus), None when
    the corresponding edge is never crossed.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    s = np.asarray(path, dtype=float)
    up = np.flatnonzero(s > m_star + gamma / math.sqrt(n))
    dn = np.flatnonzero(s < m_star - gamma / math.sqrt(n))
    return (int(up[0]) if up.size else None, int(dn[0]) if dn.size else None)


def run_saddle_exit(counts, beta: float, m_star: float, gamma: float, max_steps: int, rng,
                    dom: int = 0):
    """Simulate until the dominant proportion leaves the saddle window.

    Returns (tau_plus, tau_minus); the side not hit first is None, and both
    are None on timeout.
    """
    c = _as_counts(counts)
    n = int(c.sum())
    _, done, code, _ = run_glauber(c, beta, max_steps, rng, dom, saddle_window(m_star, gamma, n))
    if code == 1:
        return done, None
    if code == -1:
        return None, done
    return None, None


def coordinate_gap(counts, exclude_dominant: bool = True, dom: int | None = None) -> float:
    """Largest pairwise difference of proportions, optionally without the dominant color."""
    c = _as_counts(counts)
    n = c.sum()
    if exclude_dominant:
        if c.size < 3:
            raise DomainError("need q >= 3 to exclude the dominant color")
        d = int(np.argmax(c)) if dom is None else dom
        c = np.delete(c, d)
    return float((c.max() - c.min()) / n)


def classify_potts_phase(counts, thresholds: PottsThresholds, tol: float = 0.1) -> PottsPhase:
    """Nearest phase in l1 distance of proportions, or Unsettled if none is within tol.

    Disordered is a phase only while the uniform point is stable (beta < beta_s).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = _as_counts(counts).astype(float)
    s /= s.sum()
    q = s.size
    if thresholds.beta < thresholds.beta_s and np.abs(s - 1.0 / q).sum() <= tol:
        return DISORDERED
    m_r = thresholds.m_r
    rest = (1.0 - m_r) / (q - 1)
    for i in range(q):
        target = np.full(q, rest)
        target[i] = m_r
        if np.abs(s - target).sum() <= tol:
            return ordered(i)
    return UNSETTLED


def run_until_phase(counts, beta: float, thresholds: PottsThresholds, max_steps: int, rng,
                    dom: int = 0, tol: float = 0.1, check_every: int | None = None,
                    record: list | None = None):
    """Run until the state is classified into a phase (checked every `check_every` steps).

    Returns (phase, steps run, largest non-dominant count gap seen up to then,
    final counts).  When `record` is a list, (t, counts) is appended at every check.
    """
    rng = as_generator(rng)
    c = _as_counts(counts)
    n = int(c.sum())
    every = n if check_every is None else int(check_every)
    tab = exp_table(n, beta)
    gaps = c.size > 2
    max_gap = int(np.ptp(np.delete(c, dom))) if gaps else 0
    t = 0
    phase = classify_potts_phase(c, thresholds, tol)
    if record is not None:
        record.append((t, tuple(int(x) for x in c)))
    while not phase.settled and t < max_steps:
        k = min(every, max_steps - t)
        cv, done, _, g = run_glauber(c, beta, k, rng, dom, track_gap=gaps, table=tab)
        c = cv.as_array()
        t += done
        max_gap = max(max_gap, g)
        phase = classify_potts_phase(c, thresholds, tol)
        if record is not None:
            record.append((t, tuple(int(x) for x in c)))
    return phase, t, max_gap, CountVector(tuple(c))


def deterministic_flow(s0, beta: float, q: int, steps: int, n_eff: int = 1000) -> np.ndarray:
    """Euler iteration s <- s + d_beta(s)/n_eff; rows are the visited points."""
    s = np.asarray(s0, dtype=float)
    vector_drift(s, beta, q)
    out = np.empty((steps + 1, q))
    out[0] = s
    for t in range(steps):
        s = s + vector_drift(s, beta, q) / n_eff
        if abs(s.sum() - 1.0) > 1e-10 or np.any(s < 0):
            raise SimplexError("flow left the simplex")
        s = s / s.sum()
        out[t + 1] = s
    return out
