# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: same semantics as kernels_py (see its docstring).

walk_time0 and walk_insulation consume one uniform vector per step in
canonical walker order, identical to the numpy backend, so results agree
bitwise.  walk_avoidance uses per-run chunked draws instead of the numpy
backend's batched draws (same law, different stream).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, fabs

cnp.import_array()

BACKEND_NAME = "cython"

cdef double _SNAP = 1e-9


# ---------------------------------------------------------------------------
# oscillation modulus
# ---------------------------------------------------------------------------


cdef class _OscCtx:
    """Piecewise-linear function clipped to [A, B], with sparse tables and
    the band-event grid for a fixed delta."""
    cdef double[::1] x, fv, sl, l, hi, lo
    cdef double[::1] tmax, tmin          # sparse tables, K levels of stride P
    cdef Py_ssize_t P, K
    cdef double A, B, delta, gmax, gmin
    cdef double[::1] events

    def __init__(self, starts, values, slopes, double A, double B, double delta):
        st = np.ascontiguousarray(starts, dtype=np.float64)
        va = np.ascontiguousarray(values, dtype=np.float64)
        sp = np.ascontiguousarray(slopes, dtype=np.float64)
        inner = st[(st > A) & (st < B)]
        x = np.empty(len(inner) + 2)
        x[0] = A
        x[1 : len(x) - 1] = inner
        x[len(x) - 1] = B
        cdef Py_ssize_t P = len(x) - 1
        idx = np.maximum(np.searchsorted(st, x[:P], side="right") - 1, 0)
        fv = va[idx] + sp[idx] * (x[:P] - st[idx])
        sl = sp[idx]
        l = fv + sl * np.diff(x)
        self.x = x
        self.fv = fv
        self.sl = sl
        self.l = l
        hi = np.maximum(fv, l)
        lo = np.minimum(fv, l)
        self.hi = hi
        self.lo = lo
        self.P = P
        self.A = A
        self.B = B
        self.delta = delta
        self.gmax = float(hi.max())
        self.gmin = float(lo.min())
        cdef Py_ssize_t K = 1
        while (1 << K) <= P:
            K += 1
        self.K = K
        tmax = np.full(K * P, -INFINITY)
        tmin = np.full(K * P, INFINITY)
        tmax[:P] = hi
        tmin[:P] = lo
        cdef Py_ssize_t k, half, mm, i
        cdef double[::1] tmx = tmax, tmn = tmin
        for k in range(1, K):
            half = 1 << (k - 1)
            mm = P - (1 << k) + 1
            for i in range(mm):
                tmx[k * P + i] = max(tmx[(k - 1) * P + i], tmx[(k - 1) * P + i + half])
                tmn[k * P + i] = min(tmn[(k - 1) * P + i], tmn[(k - 1) * P + i + half])
        self.tmax = tmax
        self.tmin = tmin
        cdef double cap = B - delta
        ev = [A, cap] if cap >= A else [A]
        for i in range(1, P):
            if A < x[i] < cap:
                ev.append(float(x[i]))
            if A < x[i] - delta < cap:
                ev.append(float(x[i]) - delta)
        self.events = np.unique(np.asarray(ev, dtype=np.float64))

    cdef inline Py_ssize_t piece_of(self, double t):
        cdef Py_ssize_t lo = 0, hi = self.P + 1, mid
        while lo < hi:  # upper_bound over x
            mid = (lo + hi) >> 1
            if self.x[mid] <= t:
                lo = mid + 1
            else:
                hi = mid
        cdef Py_ssize_t j = lo - 1
        if j < 0:
            j = 0
        if j > self.P - 1:
            j = self.P - 1
        cdef double scale = 1.0 if fabs(t) < 1.0 else fabs(t)
        if j < self.P - 1 and self.x[j + 1] - t <= _SNAP * scale:
            j += 1
        return j

    cdef inline double value(self, Py_ssize_t j, double t):
        return self.fv[j] + self.sl[j] * (t - self.x[j])

    cdef inline double range_max(self, Py_ssize_t a, Py_ssize_t b):
        if a > b:
            return -INFINITY
        cdef Py_ssize_t n = b - a + 1, k = 0
        while (2 << k) <= n:
            k += 1
        cdef double u = self.tmax[k * self.P + a]
        cdef double v = self.tmax[k * self.P + b - (1 << k) + 1]
        return u if u > v else v

    cdef inline double range_min(self, Py_ssize_t a, Py_ssize_t b):
        if a > b:
            return INFINITY
        cdef Py_ssize_t n = b - a + 1, k = 0
        while (2 << k) <= n:
            k += 1
        cdef double u = self.tmin[k * self.P + a]
        cdef double v = self.tmin[k * self.P + b - (1 << k) + 1]
        return u if u < v else v

    cdef double window_osc_at(self, double t):
        cdef double d = t + self.delta
        cdef Py_ssize_t jL = self.piece_of(t)
        cdef Py_ssize_t jR = self.piece_of(d)
        cdef double scale = 1.0 if fabs(d) < 1.0 else fabs(d)
        cdef bint right_empty = fabs(self.x[jR] - d) <= _SNAP * scale
        cdef double vt, vmax, vmin, vd, rm
        if right_empty:
            jR -= 1
            if jR <= jL:
                return fabs(self.l[jL] - self.value(jL, t))
        if jL == jR:
            return fabs(self.sl[jL]) * self.delta
        vt = self.value(jL, t)
        vmax = vt if vt > self.l[jL] else self.l[jL]
        vmin = vt if vt < self.l[jL] else self.l[jL]
        if right_empty:
            rm = self.range_max(jL + 1, jR)
            if rm > vmax:
                vmax = rm
            rm = self.range_min(jL + 1, jR)
            if rm < vmin:
                vmin = rm
        else:
            rm = self.range_max(jL + 1, jR - 1)
            if rm > vmax:
                vmax = rm
            rm = self.range_min(jL + 1, jR - 1)
            if rm < vmin:
                vmin = rm
            if self.fv[jR] > vmax:
                vmax = self.fv[jR]
            if self.fv[jR] < vmin:
                vmin = self.fv[jR]
            vd = self.value(jR, d)
            if vd > vmax:
                vmax = vd
            if vd < vmin:
                vmin = vd
        return vmax - vmin

    cdef double tail_threshold(self, double lam):
        cdef double runmax = -INFINITY, runmin = INFINITY
        cdef double w = self.B, M3, m3, a, b, ts
        cdef Py_ssize_t j
        for j in range(self.P - 1, -1, -1):
            M3 = runmax if runmax > self.l[j] else self.l[j]
            m3 = runmin if runmin < self.l[j] else self.l[j]
            if M3 - m3 > lam:
                return w
            a = self.fv[j]
            b = self.sl[j]
            if M3 - lam <= a <= m3 + lam:
                w = self.x[j]
                if self.hi[j] > runmax:
                    runmax = self.hi[j]
                if self.lo[j] < runmin:
                    runmin = self.lo[j]
                continue
            if b > 0:
                ts = self.x[j] + (M3 - lam - a) / b
            elif b < 0:
                ts = self.x[j] + (m3 + lam - a) / b
            else:
                ts = self.x[j]
            if ts < self.x[j]:
                ts = self.x[j]
            return w if w < ts else ts
        return w

    cdef double umax(self, double t0, double lam):
        cdef Py_ssize_t j = self.piece_of(t0)
        cdef double runmax = -INFINITY, runmin = INFINITY
        cdef double start = t0, astart, M3, m3, end, fend, b, u, hi2, lo2
        while True:
            astart = self.value(j, start)
            M3 = runmax if runmax > astart else astart
            m3 = runmin if runmin < astart else astart
            if M3 - m3 > lam:
                return start
            end = self.x[j + 1]
            fend = self.value(j, end)
            hi2 = M3 if M3 > fend else fend
            lo2 = m3 if m3 < fend else fend
            if hi2 - lo2 <= lam:
                if j + 1 >= self.P:
                    return self.B
                runmax = hi2
                runmin = lo2
                j += 1
                start = self.x[j]
                continue
            b = self.sl[j]
            if b > 0:
                u = start + (m3 + lam - astart) / b
            elif b < 0:
                u = start + (M3 - lam - astart) / b
            else:
                u = start
            if u < start:
                u = start
            if u > end:
                u = end
            return u


cdef Py_ssize_t _push(double[::1] iv, Py_ssize_t n, double a, double b):
    cdef double scale
    if b < a:
        return n
    scale = 1.0 if fabs(a) < 1.0 else fabs(a)
    if n > 0 and a <= iv[2 * n - 1] + 1e-15 * scale:
        if b > iv[2 * n - 1]:
            iv[2 * n - 1] = b
        return n
    iv[2 * n] = a
    iv[2 * n + 1] = b
    return n + 1


cdef Py_ssize_t _bands(_OscCtx pc, double lam, double[::1] out):
    """Feasible window starts in [A, B-delta] as closed intervals in out."""
    cdef Py_ssize_t ne = pc.events.shape[0]
    cdef Py_ssize_t n = 0, k, jL, jR, iu, iv
    cdef double p, t0, t1, tm, lo_t, hi_t, a, b, eps
    cdef double sup_a[5]
    cdef double sup_b[5]
    cdef double inf_a[5]
    cdef double inf_b[5]
    cdef Py_ssize_t nsup, ninf
    cdef double fmax, fmin
    for k in range(ne):
        p = pc.events[k]
        if pc.window_osc_at(p) <= lam:
            n = _push(out, n, p, p)
        if k + 1 >= ne:
            break
        t0 = p
        t1 = pc.events[k + 1]
        tm = 0.5 * (t0 + t1)
        jL = pc.piece_of(tm)
        jR = pc.piece_of(tm + pc.delta)
        if jL == jR:
            if fabs(pc.sl[jL]) * pc.delta <= lam:
                n = _push(out, n, t0, t1)
            continue
        sup_a[0] = pc.fv[jL] - pc.sl[jL] * pc.x[jL]
        sup_b[0] = pc.sl[jL]
        sup_a[1] = pc.l[jL]
        sup_b[1] = 0.0
        sup_a[2] = pc.fv[jR]
        sup_b[2] = 0.0
        sup_a[3] = pc.fv[jR] + pc.sl[jR] * (pc.delta - pc.x[jR])
        sup_b[3] = pc.sl[jR]
        for iu in range(4):
            inf_a[iu] = sup_a[iu]
            inf_b[iu] = sup_b[iu]
        nsup = 4
        ninf = 4
        fmax = pc.range_max(jL + 1, jR - 1)
        fmin = pc.range_min(jL + 1, jR - 1)
        if fmax > -INFINITY:
            sup_a[4] = fmax
            sup_b[4] = 0.0
            nsup = 5
        if fmin < INFINITY:
            inf_a[4] = fmin
            inf_b[4] = 0.0
            ninf = 5
        lo_t = t0
        hi_t = t1
        for iu in range(nsup):
            for iv in range(ninf):
                a = sup_a[iu] - inf_a[iv]
                b = sup_b[iu] - inf_b[iv]
                if b == 0.0:
                    if a > lam:
                        lo_t = 1.0
                        hi_t = 0.0
                elif b > 0.0:
                    if (lam - a) / b < hi_t:
                        hi_t = (lam - a) / b
                else:
                    if (lam - a) / b > lo_t:
                        lo_t = (lam - a) / b
                if lo_t > hi_t:
                    break
            if lo_t > hi_t:
                break
        if lo_t <= hi_t:
            eps = fabs(t0)
            if fabs(t1) > eps:
                eps = fabs(t1)
            if eps < 1.0:
                eps = 1.0
            eps *= 1e-15
            a = lo_t if lo_t > t0 + eps else t0 + eps
            b = hi_t if hi_t < t1 - eps else t1 - eps
            n = _push(out, n, a, b)
    return n


cdef bint _in_bands(double[::1] bands, Py_ssize_t nb, double t):
    cdef Py_ssize_t k
    for k in range(nb):
        if bands[2 * k] <= t <= bands[2 * k + 1]:
            return True
        if bands[2 * k] > t:
            return False
    return False


cdef Py_ssize_t _merge(double[::1] iv, Py_ssize_t n):
    """Sort (shell sort on pairs) and merge overlapping closed intervals."""
    cdef Py_ssize_t gap = 1, i, j, m
    cdef double a, b
    while gap < n // 3:
        gap = 3 * gap + 1
    while gap >= 1:
        for i in range(gap, n):
            a = iv[2 * i]
            b = iv[2 * i + 1]
            j = i
            while j >= gap and iv[2 * (j - gap)] > a:
                iv[2 * j] = iv[2 * (j - gap)]
                iv[2 * j + 1] = iv[2 * (j - gap) + 1]
                j -= gap
            iv[2 * j] = a
            iv[2 * j + 1] = b
        gap //= 3
    m = 0
    for i in range(n):
        a = iv[2 * i]
        b = iv[2 * i + 1]
        if b < a:
            continue
        if m > 0 and a <= iv[2 * m - 1]:
            if b > iv[2 * m - 1]:
                iv[2 * m - 1] = b
        else:
            iv[2 * m] = a
            iv[2 * m + 1] = b
            m += 1
    return m


cdef bint _feasible_c(_OscCtx pc, double lam):
    cdef double A = pc.A, B = pc.B, delta = pc.delta
    cdef double w, cap, first_hi, p, q, s1, s2, t, a, b, c, d
    cdef Py_ssize_t nb, nr, nn, nc, ns, k, r, i, rounds, max_rounds
    cdef Py_ssize_t cap_iv
    if pc.gmax - pc.gmin <= lam:
        return True
    if B - A < 2.0 * delta:
        return False
    w = pc.tail_threshold(lam)
    cap = B - delta
    if w > cap:
        return False
    cap_iv = 2 * pc.events.shape[0] + 16
    buf = np.empty(12 * cap_iv)
    cdef double[::1] bands = buf[: 2 * cap_iv]
    cdef double[::1] reach = buf[2 * cap_iv : 4 * cap_iv]
    cdef double[::1] newiv = buf[4 * cap_iv : 8 * cap_iv]
    cdef double[::1] cov = buf[8 * cap_iv :]
    nb = _bands(pc, lam, bands)
    if nb == 0 or not _in_bands(bands, nb, A):
        return False
    first_hi = pc.umax(A, lam)
    if first_hi > cap:
        first_hi = cap
    if first_hi < A + delta:
        return False
    reach[0] = A + delta
    reach[1] = first_hi
    nr = 1
    cov[0] = reach[0]
    cov[1] = reach[1]
    nc = 1
    max_rounds = <Py_ssize_t> ceil((B - A) / delta) + 4
    for rounds in range(max_rounds):
        for r in range(nr):
            a = reach[2 * r] if reach[2 * r] > w else w
            b = reach[2 * r + 1] if reach[2 * r + 1] < cap else cap
            if a <= b:
                return True
        nn = 0
        for r in range(nr):
            p = reach[2 * r]
            q = reach[2 * r + 1]
            for k in range(nb):
                s1 = bands[2 * k] if bands[2 * k] > p else p
                s2 = bands[2 * k + 1] if bands[2 * k + 1] < q else q
                if s1 <= s2 and nn < 2 * cap_iv - 1:
                    newiv[2 * nn] = s1 + delta
                    newiv[2 * nn + 1] = (s2 + delta) if (s2 + delta) < cap else cap
                    nn += 1
            if _in_bands(bands, nb, q):
                t = pc.umax(q, lam)
                if t > cap:
                    t = cap
                if t >= q + delta and nn < 2 * cap_iv - 1:
                    newiv[2 * nn] = q + delta
                    newiv[2 * nn + 1] = t
                    nn += 1
        nn = _merge(newiv, nn)
        # subtract covered; write survivors back into reach
        ns = 0
        for i in range(nn):
            a = newiv[2 * i]
            b = newiv[2 * i + 1]
            for k in range(nc):
                c = cov[2 * k]
                d = cov[2 * k + 1]
                if d < a or c > b:
                    continue
                if c > a and ns < cap_iv - 1:
                    reach[2 * ns] = a
                    reach[2 * ns + 1] = c if c < b else b
                    ns += 1
                if d < b:
                    if d > a:
                        a = d
                else:
                    a = b + 1.0
                    break
            if a <= b and ns < cap_iv - 1:
                reach[2 * ns] = a
                reach[2 * ns + 1] = b
                ns += 1
        ns = _merge(reach, ns)
        if ns == 0:
            return False
        for i in range(ns):
            if nc < 2 * cap_iv - 1:
                cov[2 * nc] = reach[2 * i]
                cov[2 * nc + 1] = reach[2 * i + 1]
                nc += 1
        nc = _merge(cov, nc)
        nr = ns
    return False


def osc_feasible(starts, values, slopes, double A, double B, double delta, double lam):
    if lam < 0:
        return False
    cdef _OscCtx pc = _OscCtx(starts, values, slopes, A, B, delta)
    return bool(_feasible_c(pc, lam))


def osc_value(starts, values, slopes, double A, double B, double delta,
              double rtol=1e-10, double atol=1e-12):
    cdef _OscCtx pc = _OscCtx(starts, values, slopes, A, B, delta)
    cdef double hi = pc.gmax - pc.gmin
    cdef double lo = 0.0, mid, tol
    if hi <= atol:
        return 0.0
    if B - A < 2.0 * delta:
        return hi
    if _feasible_c(pc, 0.0):
        return 0.0
    while True:
        tol = rtol * hi
        if tol < atol:
            tol = atol
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if _feasible_c(pc, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# monotone matching
# ---------------------------------------------------------------------------


def match_dist(sgrid, fvals, tgrid, gvals):
    cdef double[::1] sg = np.ascontiguousarray(sgrid, dtype=np.float64)
    cdef double[::1] tg = np.ascontiguousarray(tgrid, dtype=np.float64)
    cdef double[::1] fv = np.ascontiguousarray(fvals, dtype=np.float64)
    cdef double[::1] gv = np.ascontiguousarray(gvals, dtype=np.float64)
    cdef Py_ssize_t n = sg.shape[0], m = tg.shape[0], i, j
    cdef double[::1] prev = np.empty(m)
    cdef double[::1] cur = np.empty(m)
    cdef double c, best, si, fi
    with nogil:
        for j in range(m):
            c = fabs(sg[0] - tg[j]) + fabs(fv[0] - gv[j])
            if j == 0:
                prev[0] = c
            else:
                prev[j] = c if c > prev[j - 1] else prev[j - 1]
        for i in range(1, n):
            si = sg[i]
            fi = fv[i]
            c = fabs(si - tg[0]) + fabs(fi - gv[0])
            cur[0] = c if c > prev[0] else prev[0]
            for j in range(1, m):
                best = prev[j]
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                c = fabs(si - tg[j]) + fabs(fi - gv[j])
                cur[j] = c if c > best else best
            for j in range(m):
                prev[j] = cur[j]
    return float(prev[m - 1])


# ---------------------------------------------------------------------------
# coalescing random walk engines
# ---------------------------------------------------------------------------


cdef inline Py_ssize_t _draw(double[::1] cdf, double u) nogil:
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _sort_unique(long long[::1] a, Py_ssize_t n) nogil:
    cdef Py_ssize_t gap = 1, i, j, m
    cdef long long v
    while gap < n // 3:
        gap = 3 * gap + 1
    while gap >= 1:
        for i in range(gap, n):
            v = a[i]
            j = i
            while j >= gap and a[j - gap] > v:
                a[j] = a[j - gap]
                j -= gap
            a[j] = v
        gap //= 3
    m = 0
    for i in range(n):
        if m == 0 or a[i] != a[m - 1]:
            a[m] = a[i]
            m += 1
    return m


def walk_time0(cdf_in, offsets_in, long long span_hw, long long count_hw,
               long long T, snaps, rng, long long absorb_at=0):
    cdef double[::1] cdf = np.ascontiguousarray(cdf_in, dtype=np.float64)
    cdef long long[::1] offsets = np.ascontiguousarray(offsets_in, dtype=np.int64)
    snaps = [int(t) for t in snaps]
    if absorb_at > 0:
        pos_np = np.arange(1, absorb_at, dtype=np.int64)
    else:
        pos_np = np.arange(-span_hw, span_hw + 1, dtype=np.int64)
    cdef long long[::1] pos = pos_np
    cdef Py_ssize_t n = pos_np.shape[0], i, m
    counts = np.zeros(len(snaps), dtype=np.int64)
    cdef long long[::1] cview = counts
    snap_idx = {}
    for i, t in enumerate(snaps):
        snap_idx.setdefault(t, []).append(i)
    cdef long long tmax = max(snaps) if snaps else 0
    cdef long long t_, p, cc
    cdef double[::1] u

    for idx in snap_idx.get(0, ()):
        if absorb_at > 0:
            cview[idx] = n
        else:
            cc = 0
            for i in range(n):
                if -count_hw <= pos[i] <= count_hw:
                    cc += 1
            cview[idx] = cc
    for t_ in range(1, tmax + 1):
        if n > 0:
            u = rng.random(n)
            with nogil:
                m = 0
                for i in range(n):
                    p = pos[i] + offsets[_draw(cdf, u[i])]
                    if absorb_at > 0:
                        if 0 < p < absorb_at:
                            pos[m] = p
                            m += 1
                    else:
                        if -span_hw <= p <= span_hw:
                            pos[m] = p
                            m += 1
                n = _sort_unique(pos, m)
        for idx in snap_idx.get(t_, ()):
            if absorb_at > 0:
                cview[idx] = n
            else:
                cc = 0
                for i in range(n):
                    if -count_hw <= pos[i] <= count_hw:
                        cc += 1
                cview[idx] = cc
    return counts


def walk_insulation(cdf_in, offsets_in, long long n_units, long long m_sites,
                    long long pad_units, long long burn_steps, long long unit_steps,
                    long long n_seeds, rng, bint absorb=False):
    cdef double[::1] cdf = np.ascontiguousarray(cdf_in, dtype=np.float64)
    cdef long long[::1] offsets = np.ascontiguousarray(offsets_in, dtype=np.int64)
    cdef long long m = m_sites
    cdef long long off = pad_units * m
    cdef long long S = (n_units + 2 * pad_units) * m
    cdef long long stride = S + 2
    cdef long long base0 = 1 if absorb else 0
    cdef Py_ssize_t per = (S - 1) if absorb else (S + 1)
    cdef Py_ssize_t n = per * n_seeds, i, w, sd
    pos_np = np.empty(n, dtype=np.int64)
    lock_np = np.full(n, -1, dtype=np.int64)
    key_np = np.empty(n, dtype=np.int64)
    cdef long long[::1] pos = pos_np, lock = lock_np, key = key_np
    with nogil:
        for sd in range(n_seeds):
            for i in range(per):
                pos[sd * per + i] = sd * stride + base0 + i
    out = np.zeros((n_seeds, n_units), dtype=bool)
    cdef cnp.uint8_t[:, ::1] oview = out.view(np.uint8)
    cdef long long t_, site, c, lockspan = n_units + 2
    cdef double[::1] u
    cdef Py_ssize_t total = <Py_ssize_t> (burn_steps + unit_steps)
    for t_ in range(1, total + 1):
        if n == 0:
            break
        u = rng.random(n)
        with nogil:
            w = 0
            for i in range(n):
                site = pos[i] % stride + offsets[_draw(cdf, u[i])]
                if absorb:
                    if site <= 0 or site >= S:
                        continue
                else:
                    if site < 0 or site > S:
                        continue
                pos[w] = pos[i] - pos[i] % stride + site
                lock[w] = lock[i]
                w += 1
            n = w
            if t_ >= burn_steps:
                for i in range(n):
                    site = pos[i] % stride
                    c = (site - off) // m if site >= off else -1
                    if c < 0 or c >= n_units or (site - off) % m == 0:
                        c = -1
                    if t_ == burn_steps:
                        lock[i] = c
                    elif lock[i] != c:
                        lock[i] = -1
            for i in range(n):
                key[i] = pos[i] * lockspan + (n_units - lock[i])
            n = _sort_unique_groups(key, n, lockspan)
            for i in range(n):
                pos[i] = key[i] // lockspan
                lock[i] = n_units - key[i] % lockspan
    for i in range(n):
        if lock[i] >= 0:
            oview[<Py_ssize_t> (pos[i] // stride), <Py_ssize_t> lock[i]] = 1
    return out


cdef Py_ssize_t _sort_unique_groups(long long[::1] a, Py_ssize_t n, long long span) nogil:
    """Sort composite keys; keep the first key per pos group (max lock)."""
    cdef Py_ssize_t gap = 1, i, j, m
    cdef long long v
    while gap < n // 3:
        gap = 3 * gap + 1
    while gap >= 1:
        for i in range(gap, n):
            v = a[i]
            j = i
            while j >= gap and a[j - gap] > v:
                a[j] = a[j - gap]
                j -= gap
            a[j] = v
        gap //= 3
    m = 0
    for i in range(n):
        if m == 0 or a[i] // span != a[m - 1] // span:
            a[m] = a[i]
            m += 1
    return m


def walk_avoidance(cdf_in, offsets_in, long long gap_sites, long long total_steps,
                   long long n_runs, rng):
    """Per-run chunked draws (backend-specific stream; same law as numpy)."""
    cdef double[::1] cdf = np.ascontiguousarray(cdf_in, dtype=np.float64)
    cdef long long[::1] offsets = np.ascontiguousarray(offsets_in, dtype=np.int64)
    cdef long long g = gap_sites
    cdef long long full_cnt = 0, outer_cnt = 0, pair_cnt = 0
    cdef long long r, t_
    cdef long long p0, p1, p2, p3
    cdef bint a_full, a_outer, a_12
    cdef Py_ssize_t CHUNK = 16384, ci
    cdef double[::1] buf
    for r in range(n_runs):
        p0 = 0
        p1 = g
        p2 = 2 * g
        p3 = 3 * g
        a_full = True
        a_outer = True
        a_12 = True
        t_ = 0
        while t_ < total_steps and a_12:
            buf = rng.random(CHUNK)
            ci = 0
            with nogil:
                while t_ < total_steps and ci + 4 <= CHUNK:
                    p0 += offsets[_draw(cdf, buf[ci])]
                    p1 += offsets[_draw(cdf, buf[ci + 1])]
                    p2 += offsets[_draw(cdf, buf[ci + 2])]
                    p3 += offsets[_draw(cdf, buf[ci + 3])]
                    ci += 4
                    t_ += 1
                    if p1 - p0 <= 0:
                        a_12 = False
                        a_outer = False
                        a_full = False
                        break
                    if a_full and (p2 - p1 <= 0 or p3 - p2 <= 0):
                        a_full = False
                    if a_outer and p3 - p2 <= 0:
                        a_outer = False
        if a_full:
            full_cnt += 1
        if a_outer:
            outer_cnt += 1
        if a_12:
            pair_cnt += 1
    return int(full_cnt), int(outer_cnt), int(pair_cnt)
