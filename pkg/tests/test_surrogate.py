import math

import numpy as np
import pytest
from scipy.stats import kstest, norm

from mixer.errors import ConvergenceError, DomainError
from mixer.phase_diagram import SurrogateParams, beta_critical, potts_fixed_points, surrogate_params
from mixer.surrogate import (
    CrnDraws, PottsSde, estimate_A_q, find_c_star_potts, find_c_star_rc, potts_sde,
    sde_exit_prob, simulate_zbar, zbar_exit_prob, zbar_marginal_cdf, zbar_paths, zbar_step,
)

BC = beta_critical(3)


def _params(slope=0.1, p=1 / 3, v=(0.8,), mean=0.0, var=1.0, h1=1.5, h2=1.3):
    return SurrogateParams(slope, p, v, mean, var, h1, h2)


def _ehrenfest_var(n, q, steps, x0):
    """Exact variance of the dominant count after `steps` infinite-temperature updates."""
    m1, m2 = float(x0), float(x0) ** 2
    for _ in range(steps):
        # E[dX | X] = 1/q - X/n ; E[dX^2 | X] = X (q - 2)/(n q) + 1/q
        e1 = 1 / q - m1 / n
        e_xd = m1 / q - m2 / n
        e_d2 = m1 * (q - 2) / (n * q) + 1 / q
        m1, m2 = m1 + e1, m2 + 2 * e_xd + e_d2
    return m2 - m1 ** 2


class TestStep:
    def test_degenerate_is_identity(self, rng):
        p = SurrogateParams(0.0, 1.0, (0.0,), 0.0, 0.0, 0.0, 0.0)
        z = np.linspace(-3, 3, 7)
        assert np.array_equal(zbar_step(z, 0, p, rng), z)
        assert zbar_step(1.25, 4, p, rng) == 1.25

    def test_activated_increment_variance(self, rng):
        p = _params(p=1.0)
        z = zbar_step(np.zeros(10 ** 6), 0, p, rng)
        b2 = p.b_sq(0)
        se = b2 * math.sqrt(2 / (z.size - 1))
        assert abs(z.var() - b2) < 3 * se

    def test_mean_growth(self, rng):
        p = surrogate_params(3)
        z0 = 2.0
        z = zbar_step(np.full(10 ** 6, z0), 0, p, rng)
        se = z.std() / math.sqrt(z.size)
        assert abs(z.mean() - (1 + p.drift_slope / 3) * z0) < 3 * se


class TestExit:
    def test_starting_beyond_edges(self, rng):
        g = 8.0
        right = _params(mean=g + 1e-9, var=0.0)
        left = _params(mean=-g - 1e-9, var=0.0)
        assert zbar_exit_prob(right, g, 500, 100, rng)[1] == 1.0
        assert zbar_exit_prob(left, g, 500, 100, rng)[0] == 1.0

    def test_p_right_increases_toward_right_edge(self, rng):
        g = 8.0
        draws = CrnDraws.draw(4000, 2000, rng)
        ps = [simulate_zbar(_params(mean=m, var=0.0), g, draws).p_right
              for m in (0.0, 4.0, 7.0, 7.9)]
        assert all(a <= b for a, b in zip(ps, ps[1:])) and ps[-1] > 0.5

    def test_symmetric_start(self, rng):
        pl, pr, pt, _ = zbar_exit_prob(surrogate_params(3), 4.0, 4000, 2000, rng)
        assert 0.2 < pl < 0.8 and 0.2 < pr < 0.8 and pt == 0.0

    def test_run_properties(self, rng):
        run = simulate_zbar(surrogate_params(3), 8.0, CrnDraws.draw(1000, 2000, rng))
        assert run.p_left + run.p_right + run.p_timeout == pytest.approx(1.0)
        assert run.stderr > 0 and run.outcomes.size == 1000
        with pytest.raises(DomainError):
            simulate_zbar(surrogate_params(3), -1.0, CrnDraws.draw(10, 10, rng))


class TestCStar:
    def test_symmetric_target(self, rng):
        base = _params(slope=0.0, p=0.5, var=1.0)
        c = find_c_star_rc(0.5, base, gamma=8.0, replicas=20_000, tol_prob=0.005, rng=rng)
        assert abs(c) < 0.25

    def test_monotone_under_coupling(self, rng):
        sp = surrogate_params(3)
        draws = CrnDraws.draw(5000, 2000, rng)
        p = [simulate_zbar(sp.with_offset(c, 1.0), 8.0, draws).p_left for c in (-6, -3, 0, 3, 6)]
        assert all(a >= b for a, b in zip(p, p[1:]))

    def test_unbracketed_target(self, rng):
        sp = _params(slope=0.0, p=1.0, v=(0.0,), var=0.0, h1=0.0, h2=1e-6)
        with pytest.raises(ConvergenceError):
            find_c_star_rc(0.5, sp, gamma=100.0, replicas=100, rng=rng, max_steps=5)

    def test_target_domain(self, rng):
        with pytest.raises(DomainError):
            find_c_star_rc(1.0, surrogate_params(3), rng=rng)

    def test_pathwise_monotone(self, rng):
        sp = surrogate_params(3)
        draws = CrnDraws.draw(2000, 60, rng)
        lo = zbar_paths(rng.normal(0, 3, 2000), sp, draws, 60)
        hi = zbar_paths(lo[0] + rng.exponential(1.0, 2000), sp, draws, 60)
        assert np.all(hi >= lo)


class TestMarginal:
    def test_initial_law(self):
        sp = surrogate_params(3).with_offset(2.0, 0.5)
        x = np.linspace(-8, 8, 9)
        ref = norm.cdf(x, 1.0, math.sqrt(sp.init_variance))
        assert np.allclose(zbar_marginal_cdf(x, 0, sp), ref, atol=1e-15)

    @pytest.mark.parametrize("t", [1, 3, 5])
    def test_matches_simulation(self, t, rng):
        sp = surrogate_params(3)
        R = 20_000
        draws = CrnDraws.draw(R, t, rng)
        z0 = sp.init_mean + math.sqrt(sp.init_variance) * draws.xi0
        zt = zbar_paths(z0, sp, draws, t)[-1]
        assert kstest(zt, lambda x: zbar_marginal_cdf(x, t, sp)).statistic < 0.015


class TestVolatility:
    def test_infinite_temperature_oracle(self, rng):
        n, q, R = 1000, 3, 4000
        est = estimate_A_q(n, q, 0.0, R, rng)
        exact = _ehrenfest_var(n, q, n, round(n / q)) / n
        se = exact * math.sqrt(2 / (R - 1))
        assert abs(est.raw_var - exact) < 3 * se
        assert est.A > 0

    @pytest.mark.slow
    def test_stable_across_probe_sizes(self, rng):
        a = estimate_A_q(1000, 3, BC, 3000, rng)
        b = estimate_A_q(10_000, 3, BC, 3000, rng)
        assert abs(a.A - b.A) < 3 * math.hypot(a.stderr, b.stderr)

    def test_probe_size_domain(self, rng):
        with pytest.raises(DomainError):
            estimate_A_q(10, 3, BC, 10, rng)


class TestPottsCStar:
    def test_symmetrized_drift_gives_zero(self, rng):
        sde = potts_sde(3, BC, 0.707, drift="odd", n=10_000)
        c = find_c_star_potts(0.5, 3, BC, gamma=2.0, dt=1e-3, replicas=4000, rng=rng, sde=sde)
        assert abs(c) < 0.1

    @pytest.mark.slow
    def test_half_step_consistency(self, rng):
        sde = potts_sde(3, BC, 0.707, drift="finite", n=10_000)
        xi_target = 0.8
        seeds = rng.integers(0, 2 ** 32, size=2)
        c1 = find_c_star_potts(xi_target, 3, BC, 2.0, 1e-3, 3000, int(seeds[0]), sde=sde)
        c2 = find_c_star_potts(xi_target, 3, BC, 2.0, 5e-4, 3000, int(seeds[1]), sde=sde)
        # local slope of p_left in c converts probability error into offset error
        p_hi = sde_exit_prob(sde, c1 + 0.2, 2.0, 1e-3, 3000, 1).p_left
        p_lo = sde_exit_prob(sde, c1 - 0.2, 2.0, 1e-3, 3000, 1).p_left
        slope = abs(p_hi - p_lo) / 0.4
        se_c = math.sqrt(2 * xi_target * (1 - xi_target) / 3000 + 2 * 0.005 ** 2) / slope
        assert abs(c1 - c2) < 3 * se_c

    def test_dt_gate(self, rng):
        with pytest.raises(DomainError):
            find_c_star_potts(0.5, 3, BC, dt=2e-3, A=0.7, rng=rng)

    def test_sde_modes(self, rng):
        ms = potts_fixed_points(BC, 3)[0]
        lin = PottsSde(3, BC, ms, 0.7, 0.25, "linear")
        assert lin.slope > 0
        with pytest.raises(DomainError):
            PottsSde(3, BC, ms, 0.7, 0.25, "finite").exit_outcomes(
                0.0, np.zeros(3), 1, 2.0, 1e-3, 1.0)
