"""Static phase-diagram quantities of the mean-field random-cluster and Potts models.

Everything here is a deterministic function of (q, beta) and is computed in
double precision.  Roots are located by bracketed bisection; interior maxima
by golden-section search on intervals where the target is unimodal.

Notation
--------
alpha(lam)      giant-component fraction of G(n, lam/n)
f(theta)        one-step drift of the giant fraction under CM dynamics
D_beta(x)       drift of the dominant Potts proportion with the rest equal
theta_*, m_*    unstable fixed points (saddles)
theta_r, m_r    stable ordered fixed points
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, DomainError, NoRootError, SimplexError

EPS_SUPER = 1e-9
Q_MIN = 2.0 + 1e-6
SIMPLEX_TOL = 1e-12
GOLDEN_TOL = 1e-12
V_HORIZON = 64

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    """Cluster weight ``q``, inverse temperature ``beta`` and vertex count ``n``."""

    q: float
    beta: float
    n: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q > 0):
            raise DomainError(f"q must be positive, got {self.q}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise DomainError(f"beta must be nonnegative, got {self.beta}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")

    @property
    def activation_prob(self) -> float:
        return 1.0 / self.q

    @property
    def p_edge(self) -> float:
        """Percolation probability beta/n used by the cluster dynamics."""
        p = self.beta / self.n
        if p > 1.0:
            raise DomainError(f"beta/n = {p} exceeds 1")
        return p


@dataclass(frozen=True)
class RcThresholds:
    q: float
    beta: float
    beta_u: float
    beta_c: float
    beta_s: float
    theta_s: float
    theta_star: float
    theta_r: float
    lambda_star: float
    xi: float


@dataclass(frozen=True)
class PottsThresholds:
    q: float
    beta: float
    beta_u: float
    beta_c: float
    beta_s: float
    m_star: float
    m_r: float


@dataclass(frozen=True)
class SurrogateParams:
    """Coefficients of the normalized one-dimensional surrogate chain.

    The chain lives on the scale z = (L - theta_* n)/sqrt(n); none of the
    fields depends on n.
    """

    drift_slope: float
    activation_prob: float
    noise_variances: tuple
    init_mean: float
    init_variance: float
    h1_val: float
    h2_val: float

    def __post_init__(self):
        v = np.asarray(self.noise_variances, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("noise_variances must be a nonempty sequence")
        if np.any(v < 0) or self.init_variance < 0:
            raise DomainError("variances must be nonnegative")
        if not 0.0 < self.activation_prob <= 1.0:
            raise DomainError("activation_prob must lie in (0, 1]")
        object.__setattr__(self, "noise_variances", tuple(float(x) for x in v))

    def v(self, t: int) -> float:
        """Normalized R2-variance at step t, clamped beyond the stored horizon."""
        vs = self.noise_variances
        return vs[t] if t < len(vs) else vs[-1]

    def b_sq(self, t: int) -> float:
        """Increment variance b_t^2 = h1^2 v_t + h2 on an activated step."""
        return self.h1_val ** 2 * self.v(t) + self.h2_val

    def b_sq_array(self, steps: int) -> np.ndarray:
        return np.array([self.b_sq(t) for t in range(steps)])

    def with_offset(self, c: float, alpha_prime: float) -> "SurrogateParams":
        """Copy with init_mean = c * alpha_prime."""
        return SurrogateParams(self.drift_slope, self.activation_prob, self.noise_variances,
                               c * alpha_prime, self.init_variance, self.h1_val, self.h2_val)


# --------------------------------------------------------------------------
# Scalar search helpers
# --------------------------------------------------------------------------

def _bisect(fn: Callable[[float], float], lo: float, hi: float, xtol: float = 0.0,
            max_iter: int = 400) -> float:
    """Bisection on a sign change; runs to the floating-point limit unless xtol is hit."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ConvergenceError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_max(fn: Callable[[float], float], a: float, b: float,
                tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal function on [a, b]."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fn(d)
        if c >= d:
            break
    cands = [(fn(a), a), (fc, c), (fd, d), (fn(b), b)]
    best = max(cands)
    return best[1], best[0]


def _check_q(q: float, floor: float = 2.0) -> None:
    if not (math.isfinite(q) and q > floor):
        raise DomainError(f"q must exceed {floor}, got {q}")


# --------------------------------------------------------------------------
# Erdos-Renyi giant component
# --------------------------------------------------------------------------

def _check_super(lam: float, eps_super: float) -> None:
    if not lam > 1.0 + eps_super:
        raise DomainError(f"lambda = {lam} is not supercritical")


def giant_fraction(lam: float, eps_super: float = EPS_SUPER) -> float:
    """Largest root of exp(-lam x) = 1 - x."""
    _check_super(lam, eps_super)
    g = lambda x: math.expm1(-lam * x) + x
    lo = math.log(lam) / lam
    return _bisect(g, lo, 1.0)


def giant_fraction_derivative(lam: float, eps_super: float = EPS_SUPER) -> float:
    """alpha'(lam) = alpha (1 - alpha) / (1 - lam (1 - alpha))."""
    a = giant_fraction(lam, eps_super)
    return a * (1.0 - a) / (1.0 - lam * (1.0 - a))


def giant_variance_coeff(lam: float, eps_super: float = EPS_SUPER) -> float:
    """Asymptotic variance of |L1|/sqrt(n) for G(n, lam/n)."""
    a = giant_fraction(lam, eps_super)
    return a * (1.0 - a) / (1.0 - lam * (1.0 - a)) ** 2


def _alpha_or_zero(lam: float) -> float:
    return giant_fraction(lam) if lam > 1.0 + EPS_SUPER else 0.0


# --------------------------------------------------------------------------
# Random-cluster drift
# --------------------------------------------------------------------------

def activation_fractions(theta: float, q: float) -> tuple[float, float]:
    """Expected activated fraction with and without the giant: (k_a, k_ia)."""
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta}")
    if not q > 1.0:
        raise DomainError(f"q must exceed 1, got {q}")
    k_ia = (1.0 - theta) / q
    return theta + k_ia, k_ia


def theta_s(beta: float, q: float) -> float:
    """Giant fraction below which the percolation step is subcritical."""
    return (q - beta) / (beta * (q - 1.0))


def cm_drift(theta: float, params: ModelParams) -> float:
    """f(theta) = alpha(beta k_a) k_a - theta."""
    q, beta = params.q, params.beta
    if not theta > theta_s(beta, q):
        raise DomainError(f"theta = {theta} is at or below theta_s")
    k_a, _ = activation_fractions(theta, q)
    return _alpha_or_zero(beta * k_a) * k_a - theta


def cm_drift_derivative(theta: float, params: ModelParams) -> float:
    """f'(theta) = (1 - 1/q)(alpha(lam) + lam alpha'(lam)) - 1 with lam = beta k_a."""
    q, beta = params.q, params.beta
    k_a, _ = activation_fractions(theta, q)
    lam = beta * k_a
    return (1.0 - 1.0 / q) * (giant_fraction(lam) + lam * giant_fraction_derivative(lam)) - 1.0


def theta_r_equation_residual(x: float, beta: float, q: float) -> float:
    """Residual of exp(-beta x) = (1 - x)/(1 + (q - 1) x); zero at both RC fixed points."""
    return math.exp(-beta * x) - (1.0 - x) / (1.0 + (q - 1.0) * x)


def rc_fixed_points(params: ModelParams) -> tuple[float, float, float]:
    """(theta_s, theta_*, theta_r) for beta in (beta_u, beta_s)."""
    q, beta = params.q, params.beta
    _check_q(q, Q_MIN)
    b_u, _, b_s = beta_thresholds(q)
    if not b_u < beta < b_s:
        raise NoRootError(f"beta = {beta} outside (beta_u, beta_s) = ({b_u}, {b_s})")
    ts = theta_s(beta, q)
    f = lambda th: (_alpha_or_zero(beta * activation_fractions(th, q)[0])
                    * activation_fractions(th, q)[0] - th)
    t_max, f_max = _golden_max(f, ts, 1.0)
    if not f_max > 0.0:
        raise NoRootError(f"drift has no positive part at beta = {beta}")
    roots = (_bisect(f, ts, t_max), _bisect(f, t_max, 1.0))
    slopes = [cm_drift_derivative(r, params) for r in roots]
    unstable = [r for r, s in zip(roots, slopes) if s > 0]
    stable = [r for r, s in zip(roots, slopes) if s < 0]
    if len(unstable) != 1 or len(stable) != 1:
        raise NoRootError("could not separate the two drift roots")
    return ts, unstable[0], stable[0]


def lambda_star(params: ModelParams) -> float:
    """Edge density whose giant fraction equals theta_*."""
    _, th, _ = rc_fixed_points(params)
    return -math.log1p(-th) / th


# --------------------------------------------------------------------------
# Thresholds
# --------------------------------------------------------------------------

def beta_critical(q: float) -> float:
    """beta_c = 2 (q - 1) log(q - 1) / (q - 2); stable as q -> 2."""
    _check_q(q)
    d = q - 2.0
    return 2.0 * (q - 1.0) * math.log1p(d) / d


def beta_spinodal(q: float) -> float:
    """beta_s = q."""
    _check_q(q)
    return float(q)


def potts_scalar_drift(x: float, beta: float, q: float) -> tuple[float, float]:
    """(D_beta(x), D_beta'(x)) for the dominant proportion x."""
    e = math.exp(beta * (1.0 - q * x) / (q - 1.0))
    den = 1.0 + (q - 1.0) * e
    return 1.0 / den - x, q * beta * e / (den * den) - 1.0


def _x_inflection(beta: float, q: float) -> float:
    """Point where D_beta' is maximal; D is convex before it and concave after."""
    x = (1.0 + (q - 1.0) * math.log(q - 1.0) / beta) / q
    return min(max(x, 1.0 / q), 1.0)


def potts_max_drift(beta: float, q: float) -> tuple[float, float]:
    """(argmax, max) of D_beta over the concave branch [x_infl, 1]."""
    D = lambda x: potts_scalar_drift(x, beta, q)[0]
    return _golden_max(D, _x_inflection(beta, q), 1.0)


@lru_cache(maxsize=256)
def beta_uniqueness(q: float) -> float:
    """beta_u: the inverse temperature where the local maximum of D_beta touches zero."""
    _check_q(q, Q_MIN)
    lo, hi = 4.0 * (q - 1.0) / q, beta_critical(q)
    M = lambda b: potts_max_drift(b, q)[1]
    if not (M(lo) < 0.0 < M(hi)):
        raise ConvergenceError(f"cannot bracket beta_u for q = {q}")
    return _bisect(M, lo, hi, xtol=1e-13)


def beta_thresholds(q: float) -> tuple[float, float, float]:
    """(beta_u, beta_c, beta_s)."""
    _check_q(q)
    return beta_uniqueness(float(q)), beta_critical(q), beta_spinodal(q)


def xi_weight(q: float) -> float:
    """Disordered-phase weight at beta_c."""
    _check_q(q)
    bc = beta_critical(q)
    base = (q - bc / (q - 1.0)) / (q - bc)
    expo = bc ** 2 * (q - 2.0) * (q * q - 4.0 * q + 2.0) / (4.0 * q * (q - 1.0) ** 2)
    xi_p = base ** ((2.0 - q) / 2.0) * math.exp(expo) / (q - 1.0)
    return 1.0 / (1.0 + xi_p)


# --------------------------------------------------------------------------
# Potts drift
# --------------------------------------------------------------------------

def potts_fixed_points(beta: float, q: float) -> tuple[float, float]:
    """(m_*, m_r); m_* = 1/q once the uniform point is unstable (beta >= beta_s)."""
    _check_q(q, Q_MIN)
    b_u = beta_uniqueness(float(q))
    if not beta > b_u:
        raise NoRootError(f"beta = {beta} is not above beta_u = {b_u}")
    D = lambda x: potts_scalar_drift(x, beta, q)[0]
    x_infl = _x_inflection(beta, q)
    x_max, d_max = _golden_max(D, x_infl, 1.0)
    if not d_max > 0.0:
        raise NoRootError(f"D_beta has no positive part at beta = {beta}")
    m_r = _bisect(D, x_max, 1.0)
    if beta >= q:
        return 1.0 / q, m_r
    x_min, neg = _golden_max(lambda x: -D(x), 1.0 / q, x_infl)
    if not neg > 0.0:
        raise NoRootError(f"D_beta has no negative part at beta = {beta}")
    return _bisect(D, x_min, x_max), m_r


def _as_simplex(s, q: int) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size != q:
        raise SimplexError(f"expected a vector of length {q}")
    if np.any(s < -SIMPLEX_TOL) or abs(s.sum() - 1.0) > SIMPLEX_TOL:
        raise SimplexError("vector is not on the probability simplex")
    return s


def vector_drift(s, beta: float, q: int) -> np.ndarray:
    """d_beta(s) = softmax(beta s) - s."""
    s = _as_simplex(s, q)
    w = np.exp(beta * (s - s.max()))
    return w / w.sum() - s


def potts_potential(s, beta: float, q: int) -> float:
    """F_beta(s) = -(1/beta) log sum exp(beta s_i) + |s|^2 / 2; its gradient is -d_beta."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    s = _as_simplex(s, q)
    return float(-logsumexp(beta * s) / beta + 0.5 * np.dot(s, s))


# --------------------------------------------------------------------------
# Surrogate coefficients
# --------------------------------------------------------------------------

def noise_scales(lam: float, beta_c_val: float) -> tuple[float, float]:
    """(h1, h2) evaluated at the active-set density lam.

    h1 = alpha(lam) + lam alpha'(lam) is the sensitivity of the new giant to the
    number of activated vertices; h2 = sigma^2(lam) lam / beta_c is the
    percolation noise per vertex.
    """
    _check_super(lam, EPS_SUPER)
    a = giant_fraction(lam)
    da = giant_fraction_derivative(lam)
    return a + lam * da, giant_variance_coeff(lam) * lam / beta_c_val


def _nongiant_r2_density(lam: float) -> float:
    """Limiting R2^-/n of G(n, lam/n) through the subcritical dual graph."""
    a = giant_fraction(lam)
    return (1.0 - a) / (1.0 - lam * (1.0 - a))


def surrogate_variance_sequence(T: int, q: float, beta_c_val: float, lambda0: float) -> np.ndarray:
    """v_0..v_T, the normalized variance of the activated non-giant mass."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    _check_super(lambda0, EPS_SUPER)
    _, th, _ = rc_fixed_points(ModelParams(q, beta_c_val))
    _, k_ia = activation_fractions(th, q)
    r_star = k_ia / (1.0 - beta_c_val * k_ia)
    r0 = _nongiant_r2_density(lambda0)
    keep = 1.0 - 1.0 / q
    act = keep / q
    out = np.empty(T + 1)
    acc = r0
    out[0] = act * acc
    for s in range(1, T + 1):
        acc = keep * acc + r_star
        out[s] = act * acc
    return out


def surrogate_params(q: float, c: float = 0.0, beta: float | None = None,
                     horizon: int = V_HORIZON) -> SurrogateParams:
    """Surrogate coefficients at (q, beta), default beta = beta_c, with offset c."""
    b = beta_critical(q) if beta is None else beta
    mp = ModelParams(q, b)
    _, th, _ = rc_fixed_points(mp)
    lam_s = -math.log1p(-th) / th
    k_a, _ = activation_fractions(th, q)
    h1, h2 = noise_scales(b * k_a, b)
    v = surrogate_variance_sequence(horizon, q, b, lam_s)
    return SurrogateParams(
        drift_slope=cm_drift_derivative(th, mp),
        activation_prob=1.0 / q,
        noise_variances=tuple(v),
        init_mean=c * giant_fraction_derivative(lam_s),
        init_variance=giant_variance_coeff(lam_s),
        h1_val=h1,
        h2_val=h2,
    )


# --------------------------------------------------------------------------
# Bundles
# --------------------------------------------------------------------------

def rc_thresholds(q: float, beta: float) -> RcThresholds:
    b_u, b_c, b_s = beta_thresholds(q)
    ts, th, tr = rc_fixed_points(ModelParams(q, beta))
    return RcThresholds(q, beta, b_u, b_c, b_s, ts, th, tr,
                        -math.log1p(-th) / th, xi_weight(q))


def potts_thresholds(beta: float, q: float) -> PottsThresholds:
    b_u, b_c, b_s = beta_thresholds(q)
    m_s, m_r = potts_fixed_points(beta, q)
    return PottsThresholds(q, beta, b_u, b_c, b_s, m_s, m_r)


def theta_to_m(theta: float, q: float) -> float:
    """Dominant Potts proportion matching giant fraction theta."""
    return (1.0 + (q - 1.0) * theta) / q
