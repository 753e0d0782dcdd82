import math

import numpy as np
import pytest

from mixer import _backend, _fallback
from mixer.parallel import run_replicas, thread_count
from mixer.phase_diagram import beta_critical, potts_fixed_points
from mixer.potts_glauber import exp_table
from mixer.seeding import seed_stream

try:
    from mixer import _kernels
except ImportError:  # pragma: no cover
    _kernels = None

compiled = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")
BC = beta_critical(3)


@compiled
class TestParity:
    @pytest.mark.parametrize("m,p", [(1, 0.5), (50, 0.02), (3000, 2.5 / 3000), (500, 0.9)])
    def test_er_components(self, m, p):
        for key in (1, 12345, 2 ** 63 + 7):
            assert np.array_equal(_kernels.er_components(m, p, key),
                                  _fallback.er_components(m, p, key))

    @pytest.mark.parametrize("mode,q_int", [(0, 0), (1, 3)])
    def test_cm_run(self, mode, q_int):
        n = 3000
        sizes = np.ones(n, dtype=np.int64)
        args = (n, BC / n, 1 / 3, 25, 987, mode, q_int)
        a = _kernels.cm_run(sizes.copy(), *args)
        b = _fallback.cm_run(sizes.copy(), *args)
        assert np.array_equal(np.sort(a[0]), np.sort(b[0]))
        assert np.array_equal(a[1], b[1]) and a[2] == b[2]

    def test_cm_run_window(self):
        n = 3000
        sizes = np.array([1500] + [1] * 1500, dtype=np.int64)
        args = (n, BC / n, 1 / 3, 500, 4, 0, 0, 1200.0, 1800.0)
        a = _kernels.cm_run(sizes.copy(), *args)
        b = _fallback.cm_run(sizes.copy(), *args)
        assert np.array_equal(a[1], b[1]) and a[2] == b[2] and a[2] != 0

    @pytest.mark.parametrize("track", [False, True])
    def test_glauber_run(self, track):
        n = 900
        tab = exp_table(n, BC)
        c1 = np.array([450, 225, 225], dtype=np.int64)
        c2 = c1.copy()
        a = _kernels.glauber_run(c1, tab, 20_000, 31, 0, 400.0, 500.0, track)
        b = _fallback.glauber_run(c2, tab, 20_000, 31, 0, 400.0, 500.0, track)
        assert tuple(a) == tuple(b) and np.array_equal(c1, c2)

    @pytest.mark.parametrize("mode", [0, 1, 2])
    def test_em_exit(self, mode):
        m_star = potts_fixed_points(BC, 3)[0]
        z0 = np.linspace(-1.5, 1.5, 200)
        args = (mode, 0.1, BC, 3, m_star, 100.0, 0.7, 1e-3, 2.0, 100_000, 77)
        oa, sa = _kernels.em_exit(z0.copy(), *args)
        ob, sb = _fallback.em_exit(z0.copy(), *args)
        assert np.mean(np.asarray(oa) == np.asarray(ob)) >= 0.99
        assert np.mean(np.asarray(sa) == np.asarray(sb)) >= 0.99


def test_backend_selected():
    assert _backend.NAME in ("cython", "python")
    if _kernels is not None:
        assert _backend.NAME == "cython"


class TestSeeding:
    def test_same_stream_is_identical(self):
        assert np.array_equal(seed_stream(42, 3).random(100), seed_stream(42, 3).random(100))

    def test_replica_streams_uncorrelated(self):
        a = seed_stream(42, 0).random(10_000)
        b = seed_stream(42, 1).random(10_000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05

    def test_distinct_seeds_differ(self):
        firsts = {seed_stream(s, 0).integers(2 ** 63) for s in range(100)}
        assert len(firsts) == 100

    def test_large_seed(self):
        seed_stream(2 ** 64 - 1, 2 ** 64 - 1).random()


class TestParallel:
    def test_order_and_thread_invariance(self):
        def fn(k, g):
            return k, float(g.random())

        a = run_replicas(fn, 50, 9, threads=1)
        b = run_replicas(fn, 50, 9, threads=4)
        assert a == b and [k for k, _ in a] == list(range(50))

    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("MIXER_THREADS", "2")
        assert thread_count() == 2
        assert thread_count(1) == 1
