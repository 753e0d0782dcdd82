"""Acceptance criteria 1-14, one PASS/FAIL line per check at the stated tolerances."""
import math
import time

import numpy as np
import pytest
from scipy.stats import chisquare, kstest

from mixer import _backend
from mixer.cm_dynamics import (Phase, calibrate_good_set_K, classify_rc_phase, cm_step,
                               estimate_exit_probs_cm, good_set_check, init_product,
                               run_dynamics, run_quasi_equilibration, stayed_ordered)
from mixer.exact_oracle import (cm_exact_kernel_check, cm_kernel_matrix, glauber_balance_check,
                                kernel_tv_curve, partition_from_stats, rc_exact_stationary)
from mixer.parallel import run_replicas
from mixer.phase_diagram import (ModelParams, beta_thresholds, beta_uniqueness, cm_drift, giant_fraction,
                                 giant_variance_coeff, lambda_star, potts_fixed_points,
                                 potts_max_drift, potts_thresholds, rc_fixed_points,
                                 rc_thresholds, surrogate_params, surrogate_variance_sequence,
                                 xi_weight)
from mixer.potts_glauber import (exp_table, init_hat_nu, run_glauber, run_saddle_exit,
                                 run_until_phase, ordered)
from mixer.random_graph import sample_er_components
from mixer.seeding import draw_key, seed_stream
from mixer.surrogate import (CrnDraws, estimate_A_q, find_c_star_potts, potts_sde, rc_c_star,
                             zbar_marginal_cdf, zbar_paths)

pytestmark = pytest.mark.acceptance

Q = 3
BU, BC, BS = beta_thresholds(Q)
BETA_A = (BU + BC) / 2
BETA_B = (BC + BS) / 2
XI = xi_weight(Q)
N = 10 ** 5


def test_criterion_01_thresholds(report):
    beta_uniqueness.cache_clear()
    t0 = time.perf_counter()
    bu, bc, bs = beta_thresholds(Q)
    dmax = potts_max_drift(bu, Q)[1]
    dt = time.perf_counter() - t0
    ok = (abs(bc - 4 * math.log(2)) < 1e-12 and bs == 3.0 and abs(dmax) < 1e-8
          and bu < bc < bs and dt < 1.0)
    assert report(1, ok, f"beta_c-4ln2={bc - 4 * math.log(2):.1e} beta_s={bs} "
                         f"max D(beta_u)={dmax:.1e} beta_u={bu:.12f} t={dt:.2f}s")


def test_criterion_02_fixed_points(report):
    t0 = time.perf_counter()
    ms, mr = potts_fixed_points(BC, Q)
    ident = [abs(1 / (1 + 2 * 4.0 ** (1 - 3 * x)) - x) for x in (0.5, 2 / 3)]
    mp = ModelParams(Q, BC)
    _, th, tr = rc_fixed_points(mp)
    f_th = cm_drift(th, mp)
    a_gap = abs(giant_fraction(lambda_star(mp)) - th)
    dt = time.perf_counter() - t0
    ok = (abs(ms - 0.5) < 1e-10 and abs(mr - 2 / 3) < 1e-10 and max(ident) < 1e-15
          and abs(tr - 0.5) < 1e-8 and abs(f_th) < 1e-10 and a_gap < 1e-10 and dt < 1.0)
    assert report(2, ok, f"m*={ms:.12f} m_r={mr:.12f} theta_r={tr:.10f} f(theta*)={f_th:.1e} "
                         f"|alpha(lambda*)-theta*|={a_gap:.1e} t={dt:.2f}s")


def test_criterion_03_exact_stationarity(report):
    t0 = time.perf_counter()
    cm = max(cm_exact_kernel_check(n, b, q) for n, q in ((2, 2), (3, 3), (4, 1.5), (4, 3))
             for b in (0.5, 1.5))
    sw = max(cm_exact_kernel_check(4, 2.0, q, sw=True) for q in (2, 3))
    gl = max(glauber_balance_check(6, 3, b) for b in (0.0, 1.7, 3.5))
    neg = glauber_balance_check(6, 3, 1.7, self_exclusion=False)
    dt = time.perf_counter() - t0
    ok = cm < 1e-12 and sw < 1e-12 and gl < 1e-12 and neg > 1e-6 and dt < 120
    assert report(3, ok, f"CM={cm:.1e} SW={sw:.1e} Glauber={gl:.1e} control={neg:.1e} "
                         f"t={dt:.1f}s")


@pytest.mark.slow
def test_criterion_04_giant_clt(report):
    t0 = time.perf_counter()
    lam, R = 2.0, 1000
    L1 = np.array(run_replicas(lambda _, g: int(sample_er_components(N, lam / N, g).sizes[0]),
                               R, 404))
    a, s2 = giant_fraction(lam), giant_variance_coeff(lam)
    se = math.sqrt(s2 * N / R)
    z_mean = (L1.mean() - a * N) / se
    var_rel = L1.var(ddof=1) / (s2 * N) - 1
    ks = kstest((L1 - a * N) / math.sqrt(s2 * N), "norm").statistic
    dt = time.perf_counter() - t0
    ok = abs(z_mean) < 3 and abs(var_rel) < 0.10 and ks < 0.05 and dt < 300
    assert report(4, ok, f"mean z={z_mean:+.2f} var rel err={var_rel:+.3f} KS={ks:.4f} "
                         f"t={dt:.0f}s")


@pytest.mark.slow
def test_criterion_05_good_set(report):
    t0 = time.perf_counter()
    T, R = 5, 500
    thr = rc_thresholds(Q, BC)
    mp = ModelParams(Q, BC, N)
    K = calibrate_good_set_K(N, mp, thr, T, 200, 505)
    v = surrogate_variance_sequence(T + 1, Q, BC, thr.lambda_star)

    def one(_, g):
        _, traj, _ = run_dynamics(init_product(N, thr.lambda_star, g), mp, T, g)
        return good_set_check(traj, K, 0, v, thr.theta_star, Q).items.all(axis=0)

    items = np.array(run_replicas(one, R, 5050))
    structural = items[:, :5].all(axis=1).mean()
    frac = items.all(axis=1).mean()
    dt = time.perf_counter() - t0
    ok = frac >= 0.99 and dt < 300
    report(5, ok, f"K={K:.0f} all predicates {frac:.3f} (structural {structural:.3f}, "
                  f"variance bound {items[:, 5].mean():.3f}) t={dt:.0f}s")
    assert ok


def _quasi(beta, lam_shift, seed):
    thr = rc_thresholds(Q, beta)
    mp = ModelParams(Q, beta, N)

    def one(_, g):
        return run_quasi_equilibration(N, init_product(N, thr.lambda_star + lam_shift, g), mp,
                                       thr, g)

    return thr, run_replicas(one, 200, seed)


@pytest.mark.slow
def test_criterion_06_quasi_equilibration(report):
    t0 = time.perf_counter()
    _, low = _quasi(BETA_A, -0.1, 606)
    f_dis = np.mean([ph is Phase.DISORDERED for ph, _, _ in low])
    thr, high = _quasi(BETA_B, +0.1, 607)
    f_ord = np.mean([ph is Phase.ORDERED and abs(tr.L1[-1] / N - thr.theta_r) < 0.05
                     for ph, tr, _ in high])
    dt = time.perf_counter() - t0
    ok = f_dis >= 0.95 and f_ord >= 0.95 and dt < 600
    assert report(6, ok, f"Disordered at beta={BETA_A:.4f}: {f_dis:.3f}; Ordered near theta_r "
                         f"at beta={BETA_B:.4f}: {f_ord:.3f} t={dt:.0f}s")


@pytest.mark.slow
def test_criterion_07_slow_mixing(report):
    t0 = time.perf_counter()
    thr, runs = _quasi(BETA_A, +0.1, 707)
    frac = np.mean([stayed_ordered(tr, thr) for _, tr, _ in runs])
    dt = time.perf_counter() - t0
    ok = frac >= 0.95 and dt < 600
    assert report(7, ok, f"stayed Ordered over {len(runs[0][1]) - 1} steps at "
                         f"beta={BETA_A:.4f}: {frac:.3f} t={dt:.0f}s")


@pytest.mark.slow
def test_criterion_08_critical_exit(report):
    t0 = time.perf_counter()
    c = rc_c_star(Q, XI, 8.0, 20_000, rng=seed_stream(808, 0))
    thr = rc_thresholds(Q, BC)
    est = estimate_exit_probs_cm(N, thr.lambda_star + c / math.sqrt(N), ModelParams(Q, BC, N),
                                 8.0, 500, 2000, 8080, theta_star=thr.theta_star)
    dt = time.perf_counter() - t0
    ok = abs(est.p_left - XI) <= 0.05 and est.p_timeout < 0.02 and dt < 1200
    assert report(8, ok, f"c*={c:.3f} p_left={est.p_left:.3f} xi={XI:.4f} "
                         f"p_timeout={est.p_timeout:.3f} t={dt:.0f}s")


@pytest.mark.slow
def test_criterion_09_surrogate_fidelity(report):
    t0 = time.perf_counter()
    thr = rc_thresholds(Q, BC)
    mp = ModelParams(Q, BC, N)
    sp = surrogate_params(Q)

    def one(_, g):
        _, traj, _ = run_dynamics(init_product(N, thr.lambda_star, g), mp, 5, g)
        return (traj.L1 - thr.theta_star * N) / math.sqrt(N)

    Z = np.array(run_replicas(one, 2000, 909))
    ks = [kstest(Z[:, t], lambda x, t=t: zbar_marginal_cdf(x, t, sp)).statistic
          for t in range(1, 6)]
    dt = time.perf_counter() - t0
    ok = max(ks) < 0.05 and dt < 1200
    assert report(9, ok, "KS t=1..5: " + " ".join(f"{k:.4f}" for k in ks) + f" t={dt:.0f}s")


def test_criterion_10_monotonicity(report):
    t0 = time.perf_counter()
    g = seed_stream(1010, 0)
    sp = surrogate_params(Q)
    R, steps = 10_000, 200
    draws = CrnDraws.draw(R, steps, g)
    z_lo = g.normal(0.0, 3.0, R)
    lo = zbar_paths(z_lo, sp, draws, steps)
    hi = zbar_paths(z_lo + g.exponential(1.0, R), sp, draws, steps)
    crossed = int(np.any(hi < lo, axis=0).sum())
    dt = time.perf_counter() - t0
    ok = crossed == 0 and dt < 10
    assert report(10, ok, f"{R} coupled pairs over {steps} steps, crossings={crossed} "
                          f"t={dt:.1f}s")


# --------------------------------------------------------------------------
# Potts saddle runs (criteria 11 and 12 share them)
# --------------------------------------------------------------------------

N_P = 10 ** 4
MAX_P = int(math.ceil(30 * N_P * math.log(N_P)))
BETA_11A = BC - 0.005


def _saddle_runs(beta, offset, seed):
    thr = potts_thresholds(beta, Q)

    def one(_, g):
        cv, dom = init_hat_nu(N_P, Q, thr.m_star + offset, g)
        phase, steps, gap, _ = run_until_phase(cv, beta, thr, MAX_P, g, dom)
        return phase, dom, gap

    return thr, run_replicas(one, 200, seed)


@pytest.fixture(scope="module")
def saddle_runs():
    t0 = time.perf_counter()
    a = _saddle_runs(BETA_11A, -0.05, 1111)
    b = _saddle_runs(BETA_B, +0.05, 1112)
    return a, b, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_11_potts_saddle(report, saddle_runs):
    t0 = time.perf_counter()
    (_, ra), (_, rb), t_ab = saddle_runs
    fa = np.mean([ph.kind == "Disordered" for ph, _, _ in ra])
    fb = np.mean([ph == ordered(dom) for ph, dom, _ in rb])

    thr_c = potts_thresholds(3.5, Q)

    def low_t(_, g):
        cv, dom = init_hat_nu(N_P, Q, 1 / Q, g)
        return run_until_phase(cv, 3.5, thr_c, MAX_P, g, dom)[0]

    rc = run_replicas(low_t, 200, 1113)
    colors = [ph.color for ph in rc if ph.kind == "OrderedColor"]
    fc = len(colors) / len(rc)
    p_chi = chisquare(np.bincount(colors, minlength=Q)).pvalue if colors else 0.0

    thr_d = potts_thresholds(BC, Q)
    A = estimate_A_q(N_P, Q, BC, 2000, 1114).A
    sde = potts_sde(Q, BC, A, "finite", N_P)
    c_hat = find_c_star_potts(XI, Q, BC, 4.0, 1e-3, 4000, 1115, sde=sde)

    def exit_side(_, g):
        cv, dom = init_hat_nu(N_P, Q, thr_d.m_star + c_hat / math.sqrt(N_P), g)
        up, down = run_saddle_exit(cv, BC, thr_d.m_star, 4.0, MAX_P, g, dom)
        return -1 if down is not None else (1 if up is not None else 0)

    sides = np.array(run_replicas(exit_side, 1000, 1116))
    pd = float(np.mean(sides == -1))
    dt = time.perf_counter() - t0 + t_ab
    ok_a, ok_b = fa >= 0.95, fb >= 0.95
    ok_c, ok_d = fc >= 0.95 and p_chi > 0.01, abs(pd - XI) <= 0.07
    ok = ok_a and ok_b and ok_c and ok_d and dt < 2700
    report(11, ok, f"(a) Disordered {fa:.3f} at beta={BETA_11A:.4f}; (b) OrderedColor(dom) "
                   f"{fb:.3f} at beta={BETA_B:.4f}; (c) ordered {fc:.3f} chi2 p={p_chi:.3f}; "
                   f"(d) A={A:.3f} c_hat={c_hat:.3f} p_left={pd:.3f} xi={XI:.4f} "
                   f"timeouts={np.mean(sides == 0):.3f}; t={dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_12_coordinate_gap(report, saddle_runs):
    fracs = []
    for seed, (thr, runs) in zip((1201, 1202), saddle_runs[:2]):
        A = estimate_A_q(N_P, Q, thr.beta, 2000, seed).A
        env = 2 * A * math.log(N_P) * math.sqrt(N_P)
        fracs.append((A, np.mean([gap <= env for _, _, gap in runs])))
    ok = all(f >= 0.99 for _, f in fracs)
    assert report(12, ok, "; ".join(f"A={A:.3f} within 2A ln n/sqrt(n): {f:.3f}"
                                    for A, f in fracs))


@pytest.mark.slow
def test_criterion_13_tiny_tv(report):
    t0 = time.perf_counter()
    n, q, beta, T, R = 4, 2, 2.0, 50, 100_000
    states, P = cm_kernel_matrix(n, beta, q)
    mu = rc_exact_stationary(n, beta / n, q).probs
    start = states.index((1,) * n)
    exact = kernel_tv_curve(P, start, mu, T)
    index = {s: i for i, s in enumerate(states)}
    decode: dict = {}

    def one(_, g):
        _, rec, _ = _backend.cm_run(np.ones(n, dtype=np.int64), n, beta / n, 1 / q, T,
                                    draw_key(g))
        return [hash(tuple(r)) for r in rec[:, 3:]], rec[:, 3:]

    counts = np.zeros((T + 1, len(states)))
    for keys, stats in run_replicas(one, R, 1313):
        for t, (k, row) in enumerate(zip(keys, stats)):
            i = decode.get(k)
            if i is None:
                i = decode[k] = index[partition_from_stats(n, *(int(x) for x in row))]
            counts[t, i] += 1
    law = np.zeros(len(states))
    law[start] = 1.0
    worst = 0.0
    for t in range(T + 1):
        tv = 0.5 * np.abs(counts[t] / R - mu).sum()
        band = 3 * 0.5 * np.sqrt(law * (1 - law) / R).sum()
        worst = max(worst, abs(tv - exact[t]) - band)
        law = law @ P
    tv_end = 0.5 * np.abs(counts[T] / R - mu).sum()
    dt = time.perf_counter() - t0
    ok = tv_end < 0.05 and worst <= 0 and dt < 300
    assert report(13, ok, f"TV(50)={tv_end:.4f} exact={exact[T]:.2e} max excess over "
                          f"sampling band={worst:.4f} t={dt:.0f}s")


@pytest.mark.slow
def test_criterion_14_performance(report):
    n = 10 ** 6
    mp = ModelParams(Q, BC, n)
    thr = rc_thresholds(Q, BC)
    g = seed_stream(1414, 0)
    st = init_product(n, thr.lambda_star, g)
    t0 = time.perf_counter()
    cm_step(st, mp, g)
    t_cm = time.perf_counter() - t0

    tab = exp_table(10 ** 4, BC)
    t0 = time.perf_counter()
    _, done, _, _ = run_glauber(np.array([5000, 2500, 2500]), BC, 10 ** 8, g, table=tab)
    t_gl = time.perf_counter() - t0

    mps = ModelParams(Q, BC, 20_000)
    args = (20_000, thr.lambda_star, mps, 8.0, 64, 500, 1415)
    e1 = estimate_exit_probs_cm(*args, theta_star=thr.theta_star, threads=1)
    e4 = estimate_exit_probs_cm(*args, theta_star=thr.theta_star, threads=4)
    same = (np.array_equal(e1.outcomes, e4.outcomes)
            and np.array_equal(e1.exit_steps, e4.exit_steps))
    ok = t_cm < 1.0 and done == 10 ** 8 and t_gl < 30 and same
    assert report(14, ok, f"cm_step(n=1e6)={t_cm:.3f}s Glauber 1e8 steps={t_gl:.1f}s "
                          f"serial==parallel: {same} (backend {_backend.NAME})")
