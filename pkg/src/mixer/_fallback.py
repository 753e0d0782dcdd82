"""Pure-Python/numpy versions of the compiled kernels.

The draw order and floating-point operations mirror ``_kernels.pyx`` so the two
backends produce identical results for the same key.  Logarithms go through
``math.log`` (the platform libm, as in C) because numpy's vectorized log may
differ in the last bit.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
REPLICA_MIX = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0
_CHUNK = 4096


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class Stream:
    """Counter-based SplitMix64 stream; draws come out in counter order."""

    def __init__(self, key: int):
        self.key = np.uint64(key)
        self.ctr = 0

    def raw(self, count: int) -> np.ndarray:
        idx = np.arange(self.ctr + 1, self.ctr + 1 + count, dtype=np.uint64)
        self.ctr += count
        return mix64(self.key + idx * GOLDEN)

    def u(self, count: int) -> np.ndarray:
        """Uniforms on [0, 1)."""
        return (self.raw(count) >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def u_open(self, count: int) -> np.ndarray:
        """Uniforms on (0, 1]."""
        return ((self.raw(count) >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _TWO_M53

    def rewind(self, count: int) -> None:
        self.ctr -= count


def _decode_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    j = ((1.0 + np.sqrt(1.0 + 8.0 * k.astype(np.float64))) * 0.5).astype(np.int64)
    while True:
        hi = j * (j - 1) // 2 > k
        if not hi.any():
            break
        j[hi] -= 1
    while True:
        lo = (j + 1) * j // 2 <= k
        if not lo.any():
            break
        j[lo] += 1
    return k - j * (j - 1) // 2, j


def _er(m: int, p: float, s: Stream) -> np.ndarray:
    if m <= 0:
        return np.zeros(0, dtype=np.int64)
    if p <= 0.0 or m == 1:
        return np.ones(m, dtype=np.int64)
    logq = math.log1p(-p) if p < 1.0 else -math.inf
    last = float(m * (m - 1) // 2 - 1)
    k = -1
    chunks = []
    while True:
        u = s.u_open(_CHUNK)
        logs = np.fromiter(map(math.log, u), dtype=np.float64, count=_CHUNK)
        jd = np.floor(logs / logq) + 1.0
        np.minimum(jd, last + 2.0, out=jd)
        pos = k + np.cumsum(jd.astype(np.int64))
        stop = np.flatnonzero(pos > last)
        if stop.size:
            used = int(stop[0])
            chunks.append(pos[:used])
            s.rewind(_CHUNK - used - 1)
            break
        chunks.append(pos)
        k = int(pos[-1])
    ks = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    i, j = _decode_pairs(ks)
    g = coo_matrix((np.ones(ks.size, dtype=np.int8), (i, j)), shape=(m, m))
    _, labels = connected_components(g, directed=False)
    return np.bincount(labels).astype(np.int64)


def er_components(m: int, p: float, key: int) -> np.ndarray:
    """Component sizes of G(m, p), ordered by smallest vertex."""
    return _er(int(m), float(p), Stream(key))


def _stats(cur: np.ndarray) -> tuple[int, int, int, int, int]:
    if cur.size == 0:
        return 0, 0, 0, 0, 0
    l1 = int(cur.max())
    l2 = int(np.partition(cur, -2)[-2]) if cur.size > 1 else 0
    r2 = int(np.dot(cur, cur))
    r3 = int(np.dot(cur, cur * cur))
    return l1, l2, r2 - l1 * l1, r3 - l1 ** 3, int(np.count_nonzero(cur == 1))


def cm_run(sizes_in, n, p, act_prob, steps, key, mode=0, q_int=0,
           lo=-math.inf, hi=math.inf):
    """See ``_kernels.cm_run``."""
    s = Stream(key)
    cur = np.array(sizes_in, dtype=np.int64)
    rec = np.zeros((steps + 1, 8), dtype=np.int64)
    rec[0, 2] = -1
    rec[0, 3:] = _stats(cur)
    exit_code = -1 if rec[0, 3] < lo else (1 if rec[0, 3] > hi else 0)
    t = 0
    while exit_code == 0 and t < steps:
        g = int(np.argmax(cur)) if cur.size else 0
        if mode == 0:
            act = s.u(cur.size) < act_prob
            A = int(cur[act].sum())
            flag = int(act[g]) if cur.size else 0
            nxt = np.concatenate([cur[~act], _er(A, p, s)])
        else:
            col = np.minimum((s.u(cur.size) * q_int).astype(np.int64), q_int - 1)
            acount = np.bincount(col, weights=cur, minlength=q_int).astype(np.int64)
            A = int(acount[col[g]]) if cur.size else 0
            flag = 1
            nxt = np.concatenate([_er(int(a), p, s) for a in acount])
        t += 1
        cur = nxt
        rec[t, 0:3] = (t, A, flag)
        rec[t, 3:] = _stats(cur)
        exit_code = -1 if rec[t, 3] < lo else (1 if rec[t, 3] > hi else 0)
    return cur, rec[:t + 1].copy(), exit_code


def _gap(counts, dom):
    rest = [c for j, c in enumerate(counts) if j != dom]
    return max(rest) - min(rest)


def glauber_run(counts_arr, table, steps, key, dom=0, lo=-math.inf, hi=math.inf,
                track_gap=False):
    """See ``_kernels.glauber_run``; mutates ``counts_arr``."""
    counts = [int(c) for c in counts_arr]
    tab = np.asarray(table, dtype=np.float64).tolist()
    q = len(counts)
    n = sum(counts)
    s = Stream(key)
    gaps = track_gap and q > 2
    max_gap = _gap(counts, dom) if gaps else 0
    cd = float(counts[dom])
    exit_code = -1 if cd < lo else (1 if cd > hi else 0)
    t = 0
    buf, pos = [], 0
    while exit_code == 0 and t < steps:
        if pos >= len(buf):
            buf = s.u(2 * _CHUNK).tolist()
            pos = 0
        v = int(buf[pos] * n)
        if v >= n:
            v = n - 1
        cum = 0
        kk = 0
        for j in range(q):
            cum += counts[j]
            if v < cum:
                kk = j
                break
        w = [tab[counts[j] - 1] if j == kk else tab[counts[j]] for j in range(q)]
        total = 0.0
        for x in w:
            total = total + x
        thr = buf[pos + 1] * total
        pos += 2
        acc = 0.0
        for j in range(q):
            acc = acc + w[j]
            if thr < acc:
                break
        counts[kk] -= 1
        counts[j] += 1
        t += 1
        if gaps:
            max_gap = max(max_gap, _gap(counts, dom))
        cd = float(counts[dom])
        exit_code = -1 if cd < lo else (1 if cd > hi else 0)
    counts_arr[:] = counts
    return t, exit_code, max_gap


def _potts_d(x, beta, q):
    return 1.0 / (1.0 + (q - 1.0) * np.exp(beta * (1.0 - q * x) / (q - 1.0))) - x


def _em_drift(z, mode, a, beta, q, m_star, sqrt_n):
    if mode == 0:
        return a * z
    if mode == 1:
        return sqrt_n * _potts_d(m_star + z / sqrt_n, beta, q)
    return 0.5 * sqrt_n * (_potts_d(m_star + z / sqrt_n, beta, q)
                           - _potts_d(m_star - z / sqrt_n, beta, q))


def em_exit(z0, mode, a, beta, q, m_star, sqrt_n, vol, dt, gamma, max_steps, key):
    """See ``_kernels.em_exit``; vectorized over replicas (agrees to rounding)."""
    z = np.array(z0, dtype=np.float64)
    R = z.size
    keys = mix64(np.uint64(key) + np.arange(1, R + 1, dtype=np.uint64) * REPLICA_MIX)
    out = np.zeros(R, dtype=np.int8)
    st = np.zeros(R, dtype=np.int64)
    alive = np.ones(R, dtype=bool)
    sd = vol * math.sqrt(dt)
    t = 0
    while True:
        left = alive & (z < -gamma)
        right = alive & (z > gamma)
        out[left], out[right] = -1, 1
        done = left | right
        st[done] = t
        alive &= ~done
        if not alive.any() or t >= max_steps:
            break
        idx = np.flatnonzero(alive)
        ctr = np.array([2 * t + 1, 2 * t + 2], dtype=np.uint64) * GOLDEN
        r1 = mix64(keys[idx] + ctr[0])
        r2 = mix64(keys[idx] + ctr[1])
        u1 = ((r1 >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * _TWO_M53
        u2 = (r2 >> np.uint64(11)).astype(np.float64) * _TWO_M53
        nrm = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        zi = z[idx]
        z[idx] = zi + _em_drift(zi, mode, a, beta, q, m_star, sqrt_n) * dt + sd * nrm
        t += 1
    st[alive] = t
    return out, st
