"""Chayes-Machta and Swendsen-Wang dynamics on mean-field random-cluster states.

A state is the multiset of component sizes.  One CM step activates each
component independently with probability 1/q and replaces the active vertices
by a fresh G(A, beta/n).  One SW step colors components uniformly from [q]
and percolates inside every color class.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .phase_diagram import ModelParams, RcThresholds
from .parallel import master_seed_from, run_replicas
from .random_graph import ComponentMultiset, sample_er_components
from .seeding import as_generator, draw_key

RECORD_COLUMNS = ("t", "A", "giant_activated", "L1", "L2", "R2_minus", "R3_minus", "I1")
_COL = {name: i for i, name in enumerate(RECORD_COLUMNS)}


class Phase(enum.Enum):
    ORDERED = "Ordered"
    DISORDERED = "Disordered"


@dataclass(frozen=True)
class RcState:
    components: ComponentMultiset
    n: int

    def __post_init__(self):
        if self.components.total != self.n:
            raise ValueError(f"components cover {self.components.total} vertices, expected {self.n}")

    @property
    def L1(self) -> int:
        s = self.components.sizes
        return int(s[0]) if s.size else 0


@dataclass(frozen=True)
class StepRecord:
    t: int
    A: int
    giant_activated: bool
    L1: int
    L2: int
    R2_minus: int
    R3_minus: int
    I1: int

    @classmethod
    def from_row(cls, row) -> "StepRecord":
        r = [int(x) for x in row]
        return cls(r[0], r[1], r[2] == 1, *r[3:])


@dataclass
class CmTrajectory:
    """Per-step records; row 0 is the initial state (A = 0, giant_activated = -1)."""

    n: int
    records: np.ndarray

    def __len__(self) -> int:
        return self.records.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.records[:, _COL[name]]

    @property
    def L1(self) -> np.ndarray:
        return self.column("L1")

    def record(self, i: int) -> StepRecord:
        return StepRecord.from_row(self.records[i])


@dataclass
class GoodSetReport:
    """Good-set predicates per step.

    items[:, 0..4] are the five structural predicates, items[:, 5] the
    variance-tracking bound; in_G_K[s] is their conjunction.
    """

    K: float
    items: np.ndarray
    deviation: np.ndarray
    in_G_K: np.ndarray = field(init=False)

    def __post_init__(self):
        self.in_G_K = self.items.all(axis=1)

    @property
    def passes(self) -> bool:
        return bool(self.in_G_K.all())


@dataclass(frozen=True)
class ExitEstimate:
    p_right: float
    p_left: float
    p_timeout: float
    stderr: float
    outcomes: np.ndarray
    exit_steps: np.ndarray


# --------------------------------------------------------------------------
# Steps and trajectories
# --------------------------------------------------------------------------

def init_product(n: int, lambda0: float, rng) -> RcState:
    """State distributed as G(n, lambda0/n)."""
    if lambda0 < 0:
        raise ValueError("lambda0 must be nonnegative")
    return RcState(sample_er_components(n, min(lambda0 / n, 1.0), rng), n)


def state_with_giant(n: int, giant: int) -> RcState:
    """One component of the given size plus singletons."""
    if not 1 <= giant <= n:
        raise ValueError("giant size must lie in [1, n]")
    sizes = np.ones(n - giant + 1, dtype=np.int64)
    sizes[0] = giant
    return RcState(ComponentMultiset(sizes), n)


def _require_integer_q(q) -> int:
    if not float(q).is_integer():
        raise TypeError(f"SW dynamics needs an integer q, got {q}")
    return int(q)


def run_dynamics(state: RcState, params: ModelParams, steps: int, rng, dynamics: str = "cm",
                 window: tuple[float, float] | None = None):
    """Run up to `steps` steps; stop once L1 leaves `window` = (lo, hi).

    Returns (final state, trajectory, exit code) with exit code -1 for
    L1 < lo, +1 for L1 > hi and 0 otherwise.
    """
    rng = as_generator(rng)
    if dynamics == "cm":
        mode, q_int = 0, 0
    elif dynamics == "sw":
        mode, q_int = 1, _require_integer_q(params.q)
    else:
        raise ValueError(f"unknown dynamics {dynamics!r}")
    lo, hi = window if window is not None else (-math.inf, math.inf)
    final, rec, code = _backend.cm_run(state.components.sizes, state.n, params.p_edge,
                                       params.activation_prob, int(steps), draw_key(rng),
                                       mode, q_int, float(lo), float(hi))
    return RcState(ComponentMultiset(final), state.n), CmTrajectory(state.n, rec), int(code)


def cm_step(state: RcState, params: ModelParams, rng, activation=None):
    """One CM step.

    `activation` optionally fixes which components (in stored order) are
    active; it is a test hook for checking the step structure.
    """
    rng = as_generator(rng)
    if activation is None:
        new, traj, _ = run_dynamics(state, params, 1, rng, "cm")
        return new, traj.record(1)
    act = np.asarray(activation, dtype=bool)
    sizes = state.components.sizes
    if act.shape != sizes.shape:
        raise ValueError("activation mask must match the component list")
    A = int(sizes[act].sum())
    fresh = sample_er_components(A, params.p_edge, rng).sizes
    new = RcState(ComponentMultiset(np.concatenate([sizes[~act], fresh])), state.n)
    s = new.components.sizes
    l1 = int(s[0])
    rec = StepRecord(1, A, bool(act[0]) if act.size else False, l1,
                     int(s[1]) if s.size > 1 else 0, int(np.dot(s, s)) - l1 * l1,
                     int(np.dot(s, s * s)) - l1 ** 3, int(np.count_nonzero(s == 1)))
    return new, rec


def sw_step(state: RcState, params: ModelParams, rng):
    """One SW step; q must be an integer."""
    _require_integer_q(params.q)
    new, traj, _ = run_dynamics(state, params, 1, rng, "sw")
    return new, traj.record(1)


def classify_rc_phase(state, thresholds: RcThresholds, n: int | None = None) -> Phase:
    """Ordered iff L1 >= theta_* n.  Accepts an RcState or an L1 value with n."""
    if isinstance(state, RcState):
        l1, n = state.L1, state.n
    else:
        l1 = int(state)
        if n is None:
            raise ValueError("n is required when passing L1 directly")
    return Phase.ORDERED if l1 >= thresholds.theta_star * n else Phase.DISORDERED


def default_max_steps(n: int, C: float = 20.0) -> int:
    return int(math.ceil(C * math.log(n)))


# --------------------------------------------------------------------------
# Good set
# --------------------------------------------------------------------------

def good_set_check(state, K: float, t, v_sequence, theta_star: float, q: float,
                   n: int | None = None) -> GoodSetReport:
    """Evaluate the good-set predicates on a state or on trajectory records.

    `state` may be an RcState (evaluated at step t) or a CmTrajectory
    (evaluated at every recorded step, t ignored).  v_sequence holds the
    normalized variances v_s; the last bound is
    |(1/q)(1 - 1/q) R2^-/n - v_s| <= log(n)^2 / sqrt(n).
    """
    if K <= 0:
        raise ValueError("K must be positive")
    if isinstance(state, CmTrajectory):
        n = state.n
        rec = state.records
        steps = rec[:, _COL["t"]]
    else:
        n = state.n
        s = state.components.sizes
        l1 = int(s[0])
        rec = np.zeros((1, len(RECORD_COLUMNS)), dtype=np.int64)
        rec[0, 3:] = (l1, int(s[1]) if s.size > 1 else 0, int(np.dot(s, s)) - l1 * l1,
                      int(np.dot(s, s * s)) - l1 ** 3, int(np.count_nonzero(s == 1)))
        steps = np.array([int(t)])
    ln = math.log(n)
    L1 = rec[:, 3].astype(float)
    L2 = rec[:, 4].astype(float)
    R2m = rec[:, 5].astype(float)
    R3m = rec[:, 6].astype(float)
    I1 = rec[:, 7].astype(float)
    v = np.asarray(v_sequence, dtype=float)
    vs = v[np.minimum(steps, v.size - 1)]
    dev = np.abs((1.0 / q) * (1.0 - 1.0 / q) * R2m / n - vs)
    items = np.column_stack([
        np.abs(L1 - theta_star * n) <= K * math.sqrt(n) * ln,
        L2 <= K * ln,
        R2m <= K * n,
        R3m <= K * n,
        I1 >= n / K,
        dev <= ln ** 2 / math.sqrt(n),
    ])
    return GoodSetReport(float(K), items, dev)


def good_set_ratios(traj: CmTrajectory, theta_star: float) -> np.ndarray:
    """Smallest K for which each structural predicate holds, maximized over steps."""
    n = traj.n
    ln = math.log(n)
    r = traj.records.astype(float)
    need = np.column_stack([
        np.abs(r[:, 3] - theta_star * n) / (math.sqrt(n) * ln),
        r[:, 4] / ln,
        r[:, 5] / n,
        r[:, 6] / n,
        n / np.maximum(r[:, 7], 1.0),
    ])
    return need.max(axis=0)


def calibrate_good_set_K(n: int, params: ModelParams, thresholds: RcThresholds, T: int,
                         replicas: int, seed, quantile: float = 0.999,
                         margin: float = 1.25, threads: int | None = None) -> float:
    """Empirical K such that a `quantile` fraction of pilot trajectories meet every item."""
    master = master_seed_from(seed)

    def one(_, rng):
        st = init_product(n, thresholds.lambda_star, rng)
        _, traj, _ = run_dynamics(st, params, T, rng)
        return good_set_ratios(traj, thresholds.theta_star).max()

    ks = np.array(run_replicas(one, replicas, master, threads))
    return float(margin * max(1.0, np.quantile(ks, quantile)))


# --------------------------------------------------------------------------
# Exit windows and equilibration
# --------------------------------------------------------------------------

def exit_window_times(trajectory, theta_star: float, gamma: float, n: int):
    """First t with L_t above theta_* n + gamma sqrt(n), and first t below theta_* n - gamma sqrt(n)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    L = trajectory.L1 if isinstance(trajectory, CmTrajectory) else np.asarray(trajectory)
    hi = theta_star * n + gamma * math.sqrt(n)
    lo = theta_star * n - gamma * math.sqrt(n)
    up = np.flatnonzero(L > hi)
    dn = np.flatnonzero(L < lo)
    return (int(up[0]) if up.size else None, int(dn[0]) if dn.size else None)


def exit_window(theta_star: float, gamma: float, n: int) -> tuple[float, float]:
    return theta_star * n - gamma * math.sqrt(n), theta_star * n + gamma * math.sqrt(n)


def estimate_exit_probs_cm(n: int, lambda0: float, params: ModelParams, gamma: float,
                           replicas: int, max_steps: int, rng, theta_star: float | None = None,
                           dynamics: str = "cm", threads: int | None = None) -> ExitEstimate:
    """Exit frequencies of L from [theta_* n -/+ gamma sqrt(n)] started at G(n, lambda0/n)."""
    if replicas < 1 or gamma <= 0:
        raise ValueError("need replicas >= 1 and gamma > 0")
    if theta_star is None:
        from .phase_diagram import rc_fixed_points
        theta_star = rc_fixed_points(params)[1]
    window = exit_window(theta_star, gamma, n)
    master = master_seed_from(rng)

    def one(_, g):
        st = init_product(n, lambda0, g)
        _, traj, code = run_dynamics(st, params, max_steps, g, dynamics, window)
        return code, len(traj) - 1

    res = run_replicas(one, replicas, master, threads)
    codes = np.array([c for c, _ in res], dtype=np.int64)
    steps = np.array([s for _, s in res], dtype=np.int64)
    p_r = float(np.mean(codes == 1))
    p_l = float(np.mean(codes == -1))
    p_t = float(np.mean(codes == 0))
    se = math.sqrt(max(p_l * (1 - p_l), 1e-300) / replicas)
    return ExitEstimate(p_r, p_l, p_t, se, codes, steps)


def run_quasi_equilibration(n: int, state0: RcState, params: ModelParams,
                            thresholds: RcThresholds, rng, C: float = 20.0,
                            delta: float = 0.05, disordered_const: float | None = None,
                            dynamics: str = "cm"):
    """Run ceil(C log n) steps and report (phase, trajectory, settled).

    Ordered runs are settled within delta n of theta_r n.  Disordered runs are
    settled once L1 <= C' log n; the default C' = 1/I(beta/q) with
    I(x) = x - 1 - log x is the large-deviation scale of the largest
    component of a subcritical G(n, x/n).
    """
    steps = default_max_steps(n, C)
    final, traj, _ = run_dynamics(state0, params, steps, rng, dynamics)
    phase = classify_rc_phase(final, thresholds)
    if phase is Phase.ORDERED:
        settled = abs(final.L1 - thresholds.theta_r * n) <= delta * n
    else:
        c = disordered_const
        if c is None:
            x = params.beta / params.q
            c = 1.0 / (x - 1.0 - math.log(x)) if 0.0 < x < 1.0 else math.inf
        settled = final.L1 <= c * math.log(n)
    return phase, traj, bool(settled)


def stayed_ordered(traj: CmTrajectory, thresholds: RcThresholds) -> bool:
    """True if every recorded L1 is at least theta_* n."""
    return bool(np.all(traj.L1 >= thresholds.theta_star * traj.n))
