"""One-dimensional surrogates for the saddle escape.

Random-cluster side: the normalized giant fluctuation z = (L - theta_* n)/sqrt(n)
is tracked by the chain

    z <- z + eps (f'(theta_*) z + N(0, b_t^2)),   eps ~ Bernoulli(1/q),

with b_t^2 = h1^2 v_t + h2.  Potts side: the dominant proportion near m_* is
tracked by the diffusion dZ = b(Z) dt + A dB in units of n Glauber steps.

Both critical offsets c_* and c_hat_* are found by bisection with common random
numbers, which makes the estimated exit probability a monotone step function
of the offset for a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import norm

from . import _backend
from .errors import ConvergenceError, DomainError
from .parallel import master_seed_from, run_replicas
from .phase_diagram import (SurrogateParams, giant_fraction_derivative, lambda_star,
                            ModelParams, potts_fixed_points, potts_scalar_drift,
                            surrogate_params)
from .potts_glauber import exp_table, run_glauber
from .seeding import as_generator, draw_key

C_BRACKET = 50.0


@dataclass
class SurrogateRun:
    """Exit outcomes (-1 left, +1 right, 0 timeout) and exit steps per replica."""

    z0_mean: float
    z0_var: float
    gamma: float
    max_steps: int
    outcomes: np.ndarray
    exit_steps: np.ndarray

    @property
    def p_left(self) -> float:
        return float(np.mean(self.outcomes == -1))

    @property
    def p_right(self) -> float:
        return float(np.mean(self.outcomes == 1))

    @property
    def p_timeout(self) -> float:
        return float(np.mean(self.outcomes == 0))

    @property
    def stderr(self) -> float:
        p = self.p_left
        return math.sqrt(p * (1.0 - p) / self.outcomes.size)


# --------------------------------------------------------------------------
# Random-cluster surrogate chain
# --------------------------------------------------------------------------

def zbar_step(z, t: int, params: SurrogateParams, rng):
    """One step of the surrogate chain; works on scalars and arrays."""
    rng = as_generator(rng)
    z = np.asarray(z, dtype=float)
    act = rng.random(z.shape) < params.activation_prob
    noise = rng.standard_normal(z.shape) * math.sqrt(params.b_sq(t))
    out = np.where(act, z + params.drift_slope * z + noise, z)
    return float(out) if out.ndim == 0 else out


@dataclass
class CrnDraws:
    """Shared randomness for coupled surrogate runs."""

    xi0: np.ndarray
    act_u: np.ndarray
    noise: np.ndarray

    @classmethod
    def draw(cls, replicas: int, max_steps: int, rng) -> "CrnDraws":
        rng = as_generator(rng)
        return cls(rng.standard_normal(replicas), rng.random((max_steps, replicas)),
                   rng.standard_normal((max_steps, replicas)))


def zbar_paths(z0: np.ndarray, params: SurrogateParams, draws: CrnDraws, steps: int) -> np.ndarray:
    """Full coupled paths (steps + 1, replicas) from given starting points."""
    z = np.array(z0, dtype=float)
    out = np.empty((steps + 1, z.size))
    out[0] = z
    for t in range(steps):
        act = draws.act_u[t] < params.activation_prob
        z = np.where(act, z + params.drift_slope * z + math.sqrt(params.b_sq(t)) * draws.noise[t], z)
        out[t + 1] = z
    return out


def simulate_zbar(params: SurrogateParams, gamma: float, draws: CrnDraws,
                  max_steps: int | None = None) -> SurrogateRun:
    """Exit outcomes from [-gamma, gamma] driven by the shared draws."""
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    steps = draws.act_u.shape[0] if max_steps is None else max_steps
    z = params.init_mean + math.sqrt(params.init_variance) * draws.xi0
    R = z.size
    out = np.zeros(R, dtype=np.int8)
    st = np.full(R, steps, dtype=np.int64)
    alive = np.ones(R, dtype=bool)
    b = np.sqrt(params.b_sq_array(steps))
    for t in range(steps + 1):
        left = alive & (z < -gamma)
        right = alive & (z > gamma)
        out[left], out[right] = -1, 1
        st[left | right] = t
        alive &= ~(left | right)
        if t == steps or not alive.any():
            break
        act = alive & (draws.act_u[t] < params.activation_prob)
        z = np.where(act, z + params.drift_slope * z + b[t] * draws.noise[t], z)
    return SurrogateRun(params.init_mean, params.init_variance, gamma, steps, out, st)


def zbar_exit_prob(params: SurrogateParams, gamma: float, replicas: int, max_steps: int, rng):
    """(p_left, p_right, p_timeout, stderr) of the surrogate chain."""
    if replicas < 1:
        raise DomainError("replicas must be positive")
    run = simulate_zbar(params, gamma, CrnDraws.draw(replicas, max_steps, rng))
    return run.p_left, run.p_right, run.p_timeout, run.stderr


def _bisect_offset(p_left_of, target: float, tol_prob: float, se_of, c_tol: float = 1e-4) -> float:
    """Bisection on a nonincreasing p_left(c) over [-C_BRACKET, C_BRACKET]."""
    lo, hi = -C_BRACKET, C_BRACKET
    p_lo, p_hi = p_left_of(lo), p_left_of(hi)
    if not p_lo >= target >= p_hi:
        raise ConvergenceError(
            f"target {target} not bracketed: p_left({lo}) = {p_lo}, p_left({hi}) = {p_hi}")
    while hi - lo > c_tol:
        mid = 0.5 * (lo + hi)
        p = p_left_of(mid)
        if abs(p - target) <= 0.25 * tol_prob:
            return mid
        if p >= target:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    p = p_left_of(mid)
    if abs(p - target) > tol_prob + 2.0 * se_of(p):
        raise ConvergenceError(f"bisection stalled at p_left = {p}")
    return mid


def find_c_star_rc(target_left_prob: float, params_base: SurrogateParams, gamma: float = 8.0,
                   replicas: int = 20000, tol_prob: float = 0.005, rng=None,
                   mean_scale: float = 1.0, max_steps: int = 2000) -> float:
    """Offset c with surrogate p_left(c) = target, where init_mean = c * mean_scale.

    For the physical chain mean_scale is alpha'(lambda_*), so that starting at
    G(n, (lambda_* + c/sqrt(n))/n) corresponds to init_mean = c alpha'(lambda_*).
    """
    if not 0.0 < target_left_prob < 1.0:
        raise DomainError("target must lie in (0, 1)")
    draws = CrnDraws.draw(replicas, max_steps, rng)

    def p_left_of(c):
        return simulate_zbar(params_base.with_offset(c, mean_scale), gamma, draws).p_left

    return _bisect_offset(p_left_of, target_left_prob, tol_prob,
                          lambda p: math.sqrt(p * (1 - p) / replicas))


def rc_c_star(q: float, target_left_prob: float | None = None, gamma: float = 8.0,
              replicas: int = 20000, tol_prob: float = 0.005, rng=None) -> float:
    """c_* for the CM chain at beta_c(q); the default target is xi(q)."""
    from .phase_diagram import beta_critical, xi_weight
    target = xi_weight(q) if target_left_prob is None else target_left_prob
    scale = giant_fraction_derivative(lambda_star(ModelParams(q, beta_critical(q))))
    return find_c_star_rc(target, surrogate_params(q), gamma, replicas, tol_prob, rng, scale)


def zbar_marginal_cdf(x, t: int, params: SurrogateParams) -> np.ndarray:
    """Exact CDF of the surrogate at step t: a mixture over activation patterns."""
    x = np.asarray(x, dtype=float)
    p = params.activation_prob
    grow = 1.0 + params.drift_slope
    cdf = np.zeros_like(x)
    for pattern in product((0, 1), repeat=t):
        k = sum(pattern)
        w = p ** k * (1.0 - p) ** (t - k)
        mean, var = params.init_mean, params.init_variance
        for i, on in enumerate(pattern):
            if on:
                mean *= grow
                var = grow * grow * var + params.b_sq(i)
        cdf += w * norm.cdf(x, loc=mean, scale=math.sqrt(var))
    return cdf


# --------------------------------------------------------------------------
# Potts diffusion surrogate
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AEstimate:
    A: float
    stderr: float
    raw_var: float
    correction: float


def _nearest_counts(n: int, q: int, m: float, dom: int = 0) -> np.ndarray:
    c1 = int(round(m * n))
    rest = n - c1
    base, extra = divmod(rest, q - 1)
    others = [base + (1 if i < extra else 0) for i in range(q - 1)]
    return np.array(others[:dom] + [c1] + others[dom:], dtype=np.int64)


def estimate_A_q(n_probe: int, q: int, beta_c_val: float, replicas: int, rng,
                 m_start: float | None = None, threads: int | None = None) -> AEstimate:
    """Volatility of sqrt(n) S_1 per n Glauber steps at the saddle.

    Every replica starts at the count vector nearest (m_*, equal rest) and
    runs n_probe steps.  The raw estimate n Var(S_1(n) - S_1(0)) is divided by
    (e^{2a} - 1)/(2a), a = D'(m_start), which removes the linear-drift
    contribution accumulated over one time unit.
    """
    if n_probe < 100:
        raise DomainError("n_probe must be at least 100")
    if m_start is None:
        try:
            m_start = potts_fixed_points(beta_c_val, q)[0]
        except Exception:
            m_start = 1.0 / q
    start = _nearest_counts(n_probe, q, m_start)
    tab = exp_table(n_probe, beta_c_val)
    master = master_seed_from(rng)

    def one(_, g):
        cv, _, _, _ = run_glauber(start.copy(), beta_c_val, n_probe, g, table=tab)
        return cv.counts[0] - start[0]

    delta = np.array(run_replicas(one, replicas, master, threads), dtype=float) / n_probe
    raw = n_probe * delta.var(ddof=1)
    a = potts_scalar_drift(start[0] / n_probe, beta_c_val, q)[1]
    corr = math.expm1(2 * a) / (2 * a) if abs(a) > 1e-12 else 1.0
    A = math.sqrt(raw / corr)
    return AEstimate(A, A / math.sqrt(2.0 * (replicas - 1)), raw, corr)


_DRIFT_MODES = {"linear": 0, "finite": 1, "odd": 2}


@dataclass(frozen=True)
class PottsSde:
    """dZ = b(Z) dt + A dB around the saddle, with Z_0 ~ N(c, d^2).

    drift 'linear' uses D'(m_*) z; 'finite' uses sqrt(n) D(m_* + z/sqrt(n))
    for a given n; 'odd' is the odd part of the finite drift about m_*.
    """

    q: int
    beta: float
    m_star: float
    A: float
    d_sq: float
    drift: str = "linear"
    n: int | None = None

    @property
    def slope(self) -> float:
        return potts_scalar_drift(self.m_star, self.beta, self.q)[1]

    def exit_outcomes(self, c: float, xi0: np.ndarray, key: int, gamma: float, dt: float,
                      max_time: float):
        mode = _DRIFT_MODES[self.drift]
        sqrt_n = math.sqrt(self.n) if self.n else 0.0
        if mode and not sqrt_n:
            raise DomainError("finite-n drift needs n")
        z0 = np.ascontiguousarray(c + math.sqrt(self.d_sq) * xi0, dtype=np.float64)
        return _backend.em_exit(z0, mode, self.slope, float(self.beta), float(self.q),
                                float(self.m_star), sqrt_n, float(self.A), float(dt),
                                float(gamma), int(math.ceil(max_time / dt)), int(key))


def potts_sde(q: int, beta_c_val: float, A: float, drift: str = "linear", n: int | None = None,
              d_sq: float | None = None) -> PottsSde:
    m_s = potts_fixed_points(beta_c_val, q)[0]
    return PottsSde(q, beta_c_val, m_s, A, m_s * (1.0 - m_s) if d_sq is None else d_sq, drift, n)


def sde_exit_prob(sde: PottsSde, c: float, gamma: float, dt: float, replicas: int, rng,
                  max_time: float = 2000.0) -> SurrogateRun:
    rng = as_generator(rng)
    xi0 = rng.standard_normal(replicas)
    out, st = sde.exit_outcomes(c, xi0, draw_key(rng), gamma, dt, max_time)
    return SurrogateRun(c, sde.d_sq, gamma, int(math.ceil(max_time / dt)), out, st)


def find_c_star_potts(target_left_prob: float, q: int, beta_c_val: float, gamma: float = 4.0,
                      dt: float = 1e-3, replicas: int = 4000, rng=None, A: float | None = None,
                      drift: str = "linear", n: int | None = None, tol_prob: float = 0.005,
                      max_time: float = 2000.0, sde: PottsSde | None = None) -> float:
    """Offset c_hat with SDE left-exit probability equal to the target.

    The initial law is N(c, d^2) with d^2 = m_*(1 - m_*), the variance of the
    product initializer's dominant proportion in units of 1/sqrt(n).  A is
    estimated with estimate_A_q when not supplied.
    """
    if not 0.0 < target_left_prob < 1.0:
        raise DomainError("target must lie in (0, 1)")
    if dt > 1e-3:
        raise DomainError("dt must not exceed 1e-3")
    rng = as_generator(rng)
    if sde is None:
        if A is None:
            A = estimate_A_q(10_000, q, beta_c_val, 2000, rng).A
        sde = potts_sde(q, beta_c_val, A, drift, n)
    xi0 = rng.standard_normal(replicas)
    key = draw_key(rng)

    def p_left_of(c):
        out, _ = sde.exit_outcomes(c, xi0, key, gamma, dt, max_time)
        return float(np.mean(out == -1))

    return _bisect_offset(p_left_of, target_left_prob, tol_prob,
                          lambda p: math.sqrt(p * (1 - p) / replicas))
