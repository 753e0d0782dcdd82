"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import math
import time

import numpy as np

from mixer import _fallback
from mixer.phase_diagram import beta_critical, potts_fixed_points
from mixer.potts_glauber import exp_table

try:
    from mixer import _kernels
except ImportError:
    _kernels = None

BC = beta_critical(3)


def _cases():
    n = 10 ** 5
    tab = exp_table(10 ** 4, BC)
    m_star = potts_fixed_points(BC, 3)[0]
    z0 = np.zeros(2000)
    return {
        "er_components m=1e5 lambda=2": lambda k: k.er_components(n, 2.0 / n, 1),
        "cm_run n=1e5 x20 steps": lambda k: k.cm_run(np.ones(n, dtype=np.int64), n, BC / n,
                                                     1 / 3, 20, 2),
        "sw_run n=1e5 x20 steps": lambda k: k.cm_run(np.ones(n, dtype=np.int64), n, BC / n,
                                                     1 / 3, 20, 3, 1, 3),
        "glauber_run 1e5 steps": lambda k: k.glauber_run(
            np.array([5000, 2500, 2500], dtype=np.int64), tab, 10 ** 5, 4),
        "em_exit 2000 paths": lambda k: k.em_exit(z0.copy(), 1, 0.0, BC, 3, m_star,
                                                  100.0, 0.7, 1e-3, 2.0, 10 ** 5, 5),
    }


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':34s} {'compiled (s)':>13s} {'fallback (s)':>13s} {'speedup':>8s}")
    for name, case in _cases().items():
        fb = _best(lambda: case(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:34s} {'n/a':>13s} {fb:13.4f} {'n/a':>8s}")
            continue
        cy = _best(lambda: case(_kernels), args.repeat)
        print(f"{name:34s} {cy:13.4f} {fb:13.4f} {fb / cy if cy else math.inf:8.1f}")


if __name__ == "__main__":
    main()
