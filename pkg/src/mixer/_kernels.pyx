# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Erdos-Renyi components, CM/SW trajectories, Glauber runs, SDE exits.

Every routine draws from a counter-based SplitMix64 stream keyed by a 64-bit
integer, so the pure-Python fallback reproduces the same draws exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, floor, sqrt, exp, cos, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t REPLICA_MIX = 0xD1B54A32D192ED03ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586

cdef struct Stream:
    uint64_t key
    uint64_t ctr


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t next_raw(Stream* s) noexcept nogil:
    s.ctr += 1
    return mix64(s.key + s.ctr * GOLDEN)


cdef inline double next_u(Stream* s) noexcept nogil:
    """Uniform on [0, 1)."""
    return <double>(next_raw(s) >> 11) * TWO_M53


cdef inline double next_u_open(Stream* s) noexcept nogil:
    """Uniform on (0, 1]."""
    return <double>((next_raw(s) >> 11) + 1) * TWO_M53


cdef inline int64_t uf_find(int64_t* parent, int64_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


cdef int64_t er_into(int64_t m, double p, Stream* s, int64_t* parent, int64_t* size,
                     int64_t* label, int64_t* out) noexcept nogil:
    """Append the component sizes of G(m, p) to out; return how many were written.

    Components are listed in order of their smallest vertex.
    """
    cdef int64_t v, i, j, k, r1, r2, nc
    cdef double logq, jd, npairs_m1
    if m <= 0:
        return 0
    if p <= 0.0 or m == 1:
        for v in range(m):
            out[v] = 1
        return m
    for v in range(m):
        parent[v] = v
        size[v] = 1
        label[v] = -1
    logq = log1p(-p)
    npairs_m1 = <double>(m * (m - 1) // 2 - 1)
    k = -1
    while True:
        jd = floor(log(next_u_open(s)) / logq) + 1.0
        if jd > npairs_m1 - <double>k:
            break
        k += <int64_t>jd
        j = <int64_t>((1.0 + sqrt(1.0 + 8.0 * <double>k)) * 0.5)
        while j * (j - 1) // 2 > k:
            j -= 1
        while (j + 1) * j // 2 <= k:
            j += 1
        i = k - j * (j - 1) // 2
        r1 = uf_find(parent, i)
        r2 = uf_find(parent, j)
        if r1 != r2:
            if size[r1] < size[r2]:
                r1, r2 = r2, r1
            parent[r2] = r1
            size[r1] += size[r2]
    nc = 0
    for v in range(m):
        r1 = uf_find(parent, v)
        if label[r1] < 0:
            label[r1] = nc
            out[nc] = size[r1]
            nc += 1
    return nc


def er_components(int64_t m, double p, uint64_t key):
    """Component sizes of G(m, p), ordered by smallest vertex."""
    cdef Stream s
    s.key = key
    s.ctr = 0
    mm = max(m, 1)
    cdef int64_t[::1] parent = np.empty(mm, dtype=np.int64)
    cdef int64_t[::1] size = np.empty(mm, dtype=np.int64)
    cdef int64_t[::1] label = np.empty(mm, dtype=np.int64)
    out_arr = np.empty(mm, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef int64_t nc
    with nogil:
        nc = er_into(m, p, &s, &parent[0], &size[0], &label[0], &out[0])
    return out_arr[:nc].copy()


cdef void stats_into(int64_t* cur, int64_t k, int64_t* rec) noexcept nogil:
    """rec[3:8] = L1, L2, R2_minus, R3_minus, I1."""
    cdef int64_t i, c, l1 = 0, l2 = 0, r2 = 0, r3 = 0, i1 = 0
    for i in range(k):
        c = cur[i]
        r2 += c * c
        r3 += c * c * c
        if c == 1:
            i1 += 1
        if c > l1:
            l2 = l1
            l1 = c
        elif c > l2:
            l2 = c
    rec[3] = l1
    rec[4] = l2
    rec[5] = r2 - l1 * l1
    rec[6] = r3 - l1 * l1 * l1
    rec[7] = i1


def cm_run(sizes_in, int64_t n, double p, double act_prob, int64_t steps, uint64_t key,
           int mode=0, int64_t q_int=0, double lo=-INFINITY, double hi=INFINITY):
    """Run up to `steps` CM (mode 0) or SW (mode 1) steps from a component list.

    Stops early once L1 < lo or L1 > hi (checked at t = 0 too).  Returns
    (final sizes, records, exit code) where records has columns
    t, A, giant_activated, L1, L2, R2_minus, R3_minus, I1 and the exit code is
    -1 (left), +1 (right) or 0 (no exit).
    """
    cdef Stream s
    s.key = key
    s.ctr = 0
    cdef int64_t[::1] cur = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] nxt = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] parent = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] size = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] label = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] color = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] acount = np.zeros(max(q_int, 1), dtype=np.int64)
    rec_arr = np.zeros((steps + 1, 8), dtype=np.int64)
    cdef int64_t[:, ::1] rec = rec_arr
    cdef const int64_t[::1] src = np.ascontiguousarray(sizes_in, dtype=np.int64)
    cdef int64_t k = src.shape[0]
    cur[:k] = src
    cdef int64_t t = 0, i, g, nk, A, c, flag, gcol
    cdef int exit_code = 0
    cdef int64_t* pc = &cur[0]
    cdef int64_t* pn = &nxt[0]
    cdef int64_t* ptmp
    cdef double u
    with nogil:
        rec[0, 0] = 0
        rec[0, 2] = -1
        stats_into(pc, k, &rec[0, 0])
        if rec[0, 3] < lo:
            exit_code = -1
        elif rec[0, 3] > hi:
            exit_code = 1
        while exit_code == 0 and t < steps:
            g = 0
            for i in range(1, k):
                if pc[i] > pc[g]:
                    g = i
            nk = 0
            A = 0
            flag = 0
            if mode == 0:
                for i in range(k):
                    u = next_u(&s)
                    if u < act_prob:
                        A += pc[i]
                        if i == g:
                            flag = 1
                    else:
                        pn[nk] = pc[i]
                        nk += 1
                nk += er_into(A, p, &s, &parent[0], &size[0], &label[0], &pn[nk])
            else:
                for c in range(q_int):
                    acount[c] = 0
                for i in range(k):
                    c = <int64_t>(next_u(&s) * q_int)
                    if c >= q_int:
                        c = q_int - 1
                    color[i] = c
                    acount[c] += pc[i]
                gcol = color[g]
                A = acount[gcol]
                flag = 1
                for c in range(q_int):
                    nk += er_into(acount[c], p, &s, &parent[0], &size[0], &label[0], &pn[nk])
            t += 1
            ptmp = pc
            pc = pn
            pn = ptmp
            k = nk
            rec[t, 0] = t
            rec[t, 1] = A
            rec[t, 2] = flag
            stats_into(pc, k, &rec[t, 0])
            if rec[t, 3] < lo:
                exit_code = -1
            elif rec[t, 3] > hi:
                exit_code = 1
    final = np.empty(k, dtype=np.int64)
    cdef int64_t[::1] fv = final
    for i in range(k):
        fv[i] = pc[i]
    return final, rec_arr[:t + 1].copy(), exit_code


def glauber_run(cnp.ndarray counts_arr, const double[::1] table, int64_t steps, uint64_t key,
                int64_t dom=0, double lo=-INFINITY, double hi=INFINITY, bint track_gap=False):
    """Heat-bath Glauber steps on a count vector, updated in place.

    table[c] = exp(beta c / n).  Stops early once counts[dom] < lo or > hi.
    Returns (steps done, exit code, max non-dominant gap in counts).
    """
    cdef int64_t[::1] counts = counts_arr
    cdef int64_t q = counts.shape[0]
    cdef int64_t n = 0
    cdef int64_t j, kk, t = 0, v, cum, gmin, gmax, gap, max_gap = 0
    cdef double total, thr, acc, cd
    cdef int exit_code = 0
    cdef Stream s
    s.key = key
    s.ctr = 0
    cdef double[::1] w = np.empty(q, dtype=np.float64)
    for j in range(q):
        n += counts[j]
    with nogil:
        if track_gap and q > 2:
            max_gap = _gap(counts, q, dom)
        cd = <double>counts[dom]
        if cd < lo:
            exit_code = -1
        elif cd > hi:
            exit_code = 1
        while exit_code == 0 and t < steps:
            v = <int64_t>(next_u(&s) * n)
            if v >= n:
                v = n - 1
            cum = 0
            kk = 0
            for j in range(q):
                cum += counts[j]
                if v < cum:
                    kk = j
                    break
            total = 0.0
            for j in range(q):
                if j == kk:
                    w[j] = table[counts[j] - 1]
                else:
                    w[j] = table[counts[j]]
                total = total + w[j]
            thr = next_u(&s) * total
            acc = 0.0
            for j in range(q):
                acc = acc + w[j]
                if thr < acc:
                    break
            if j == q:
                j = q - 1
            counts[kk] -= 1
            counts[j] += 1
            t += 1
            if track_gap and q > 2:
                gap = _gap(counts, q, dom)
                if gap > max_gap:
                    max_gap = gap
            cd = <double>counts[dom]
            if cd < lo:
                exit_code = -1
            elif cd > hi:
                exit_code = 1
    return t, exit_code, max_gap


cdef inline int64_t _gap(int64_t[::1] counts, int64_t q, int64_t dom) noexcept nogil:
    cdef int64_t j, gmin = -1, gmax = -1
    for j in range(q):
        if j == dom:
            continue
        if gmin < 0 or counts[j] < gmin:
            gmin = counts[j]
        if gmax < 0 or counts[j] > gmax:
            gmax = counts[j]
    return gmax - gmin


cdef inline double _potts_d(double x, double beta, double q) noexcept nogil:
    return 1.0 / (1.0 + (q - 1.0) * exp(beta * (1.0 - q * x) / (q - 1.0))) - x


cdef inline double _em_drift(double z, int mode, double a, double beta, double q,
                             double m_star, double sqrt_n) noexcept nogil:
    if mode == 0:
        return a * z
    if mode == 1:
        return sqrt_n * _potts_d(m_star + z / sqrt_n, beta, q)
    return 0.5 * sqrt_n * (_potts_d(m_star + z / sqrt_n, beta, q)
                           - _potts_d(m_star - z / sqrt_n, beta, q))


def em_exit(const double[::1] z0, int mode, double a, double beta, double q, double m_star,
            double sqrt_n, double vol, double dt, double gamma, int64_t max_steps,
            uint64_t key):
    """Euler-Maruyama exit from [-gamma, gamma] for each starting point.

    Drift modes: 0 linear a z; 1 sqrt(n) D(m* + z/sqrt(n)); 2 the odd part of
    mode 1 about the saddle.  Replica r uses its own stream, so outcomes are
    common random numbers across calls with the same key.
    Returns (outcome, steps) with outcome -1 left, +1 right, 0 timeout.
    """
    cdef int64_t R = z0.shape[0]
    out_arr = np.zeros(R, dtype=np.int8)
    st_arr = np.zeros(R, dtype=np.int64)
    cdef signed char[::1] out = out_arr
    cdef int64_t[::1] st = st_arr
    cdef int64_t r, t
    cdef double z, sd = vol * sqrt(dt), nrm, u1, u2
    cdef Stream s
    with nogil:
        for r in range(R):
            s.key = mix64(key + <uint64_t>(r + 1) * REPLICA_MIX)
            s.ctr = 0
            z = z0[r]
            t = 0
            while True:
                if z < -gamma:
                    out[r] = -1
                    break
                if z > gamma:
                    out[r] = 1
                    break
                if t >= max_steps:
                    break
                u1 = next_u_open(&s)
                u2 = next_u(&s)
                nrm = sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
                z = z + _em_drift(z, mode, a, beta, q, m_star, sqrt_n) * dt + sd * nrm
                t += 1
            st[r] = t
    return out_arr, st_arr
