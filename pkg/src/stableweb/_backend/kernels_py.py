"""Pure-Python/numpy kernels.

Reference implementations of the hot loops; the compiled extension in
``_ckernels.pyx`` mirrors these semantics.  Engines that draw one uniform
vector per step in canonical walker order (``walk_time0``, ``walk_full``,
``walk_insulation``) consume random draws identically in both backends, so
their outputs agree bitwise.  ``walk_avoidance`` uses a backend-specific
draw order (same law, documented in the backend package).

Piecewise-linear functions are passed as three aligned arrays
``(starts, values, slopes)``: piece ``j`` covers ``[starts[j], starts[j+1])``
with ``f(t) = values[j] + slopes[j] * (t - starts[j])``; the last piece
runs through the domain end inclusive.
"""

from __future__ import annotations

import math

import numpy as np

_SNAP = 1e-9  # relative snapping for "window edge exactly on a breakpoint"

BACKEND_NAME = "python"


# ---------------------------------------------------------------------------
# oscillation modulus
# ---------------------------------------------------------------------------


class _Pieces:
    """A piecewise-linear function clipped to an interval [A, B]."""

    __slots__ = ("x", "fv", "sl", "l", "hi", "lo", "gmax", "gmin", "_tmax", "_tmin")

    def __init__(self, starts, values, slopes, A, B):
        starts = np.asarray(starts, dtype=np.float64)
        inner = [float(s) for s in starts if A < s < B]
        x = np.array([A] + inner + [B], dtype=np.float64)
        P = len(x) - 1
        fv = np.empty(P)
        sl = np.empty(P)
        for k in range(P):
            j = max(int(np.searchsorted(starts, x[k], side="right")) - 1, 0)
            fv[k] = values[j] + slopes[j] * (x[k] - starts[j])
            sl[k] = slopes[j]
        self.x = x
        self.fv = fv
        self.sl = sl
        self.l = fv + sl * np.diff(x)  # left limit at each piece end
        self.hi = np.maximum(fv, self.l)
        self.lo = np.minimum(fv, self.l)
        self.gmax = float(self.hi.max())
        self.gmin = float(self.lo.min())
        self._tmax = _sparse_table(self.hi, np.maximum)
        self._tmin = _sparse_table(self.lo, np.minimum)

    def piece_of(self, t):
        """Index of the piece whose half-open span contains t (snapped)."""
        x = self.x
        last = len(self.fv) - 1
        j = min(max(int(np.searchsorted(x, t, side="right")) - 1, 0), last)
        if j < last and x[j + 1] - t <= _SNAP * max(1.0, abs(t)):
            j += 1
        return j

    def value(self, j, t):
        return self.fv[j] + self.sl[j] * (t - self.x[j])

    def range_max(self, a, b):
        if a > b:
            return -math.inf
        return _sparse_query(self._tmax, a, b, np.maximum)

    def range_min(self, a, b):
        if a > b:
            return math.inf
        return _sparse_query(self._tmin, a, b, np.minimum)


def _sparse_table(arr, op):
    tables = [np.asarray(arr, dtype=np.float64)]
    k = 1
    while (1 << k) <= len(arr):
        prev = tables[-1]
        half = 1 << (k - 1)
        tables.append(op(prev[: len(prev) - half], prev[half:]))
        k += 1
    return tables


def _sparse_query(tables, a, b, op):
    k = (b - a + 1).bit_length() - 1
    t = tables[k]
    return float(op(t[a], t[b - (1 << k) + 1]))


def _window_osc_at(pc: _Pieces, t, delta):
    """Exact oscillation of f over the half-open window [t, t+delta)."""
    d = t + delta
    jL = pc.piece_of(t)
    jR = pc.piece_of(d)
    right_empty = abs(pc.x[jR] - d) <= _SNAP * max(1.0, abs(d))
    if right_empty:
        jR -= 1  # window ends exactly on a node: no partial right piece
        if jR <= jL:
            return abs(pc.l[jL] - pc.value(jL, t))
    if jL == jR:
        return abs(pc.sl[jL]) * delta
    vt = pc.value(jL, t)
    vmax = max(vt, pc.l[jL])
    vmin = min(vt, pc.l[jL])
    if right_empty:
        vmax = max(vmax, pc.range_max(jL + 1, jR))
        vmin = min(vmin, pc.range_min(jL + 1, jR))
    else:
        vd = pc.value(jR, d)
        vmax = max(vmax, pc.range_max(jL + 1, jR - 1), pc.fv[jR], vd)
        vmin = min(vmin, pc.range_min(jL + 1, jR - 1), pc.fv[jR], vd)
    return vmax - vmin


def _tail_threshold(pc: _Pieces, lam):
    """Least t with oscillation of the closed cell [t, B] <= lam."""
    x, fv, sl, l = pc.x, pc.fv, pc.sl, pc.l
    runmax, runmin = -math.inf, math.inf
    w = x[-1]
    for j in range(len(fv) - 1, -1, -1):
        M3 = max(runmax, l[j])
        m3 = min(runmin, l[j])
        if M3 - m3 > lam:
            return w
        a, b = fv[j], sl[j]
        if M3 - lam <= a <= m3 + lam:
            w = x[j]
            runmax = max(runmax, pc.hi[j])
            runmin = min(runmin, pc.lo[j])
            continue
        # holds near the right end of the piece but not at its start
        if b > 0:
            ts = x[j] + (M3 - lam - a) / b
        elif b < 0:
            ts = x[j] + (m3 + lam - a) / b
        else:  # constant piece equals its left limit; cannot fail here
            ts = x[j]
        return min(w, max(ts, x[j]))
    return w


def _umax(pc: _Pieces, t0, lam):
    """Largest u with oscillation of [t0, u) <= lam (capped at B)."""
    x, fv, sl = pc.x, pc.fv, pc.sl
    B = x[-1]
    j = pc.piece_of(t0)
    runmax, runmin = -math.inf, math.inf
    start = t0
    while True:
        astart = pc.value(j, start)
        M3 = max(runmax, astart)
        m3 = min(runmin, astart)
        if M3 - m3 > lam:
            return start
        end = x[j + 1]
        fend = pc.value(j, end)
        if max(M3, fend) - min(m3, fend) <= lam:
            if j + 1 >= len(fv):
                return B
            runmax = max(M3, fend)
            runmin = min(m3, fend)
            j += 1
            start = x[j]
            continue
        b = sl[j]
        if b > 0:
            u = start + (m3 + lam - astart) / b
        elif b < 0:
            u = start + (M3 - lam - astart) / b
        else:
            u = start
        return min(max(u, start), end)


def _feasible_bands(pc: _Pieces, delta, lam, A, Tmax):
    """Closed intervals of window starts t in [A, Tmax] with osc([t,t+delta)) <= lam."""
    x = pc.x
    events = {A, Tmax}
    for xx in x[1:-1]:
        if A < xx < Tmax:
            events.add(float(xx))
        y = float(xx) - delta
        if A < y < Tmax:
            events.add(y)
    ev = sorted(events)
    out = []

    def push(a, b):
        if b < a:
            return
        if out and a <= out[-1][1] + 1e-15 * max(1.0, abs(a)):
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])

    for k, p in enumerate(ev):
        if _window_osc_at(pc, p, delta) <= lam:
            push(p, p)
        if k + 1 >= len(ev):
            break
        t0, t1 = p, ev[k + 1]
        tm = 0.5 * (t0 + t1)
        jL = pc.piece_of(tm)
        jR = pc.piece_of(tm + delta)
        if jL == jR:
            if abs(pc.sl[jL]) * delta <= lam:
                push(t0, t1)
            continue
        # affine value candidates over the open band, as (const, coeff) pairs
        phi = (pc.fv[jL] - pc.sl[jL] * pc.x[jL], pc.sl[jL])  # f(t)
        psi = (pc.fv[jR] + pc.sl[jR] * (delta - pc.x[jR]), pc.sl[jR])  # f((t+d)-)
        cands = [phi, (float(pc.l[jL]), 0.0), (float(pc.fv[jR]), 0.0), psi]
        fmax = pc.range_max(jL + 1, jR - 1)
        fmin = pc.range_min(jL + 1, jR - 1)
        sup_c = cands + ([(fmax, 0.0)] if fmax > -math.inf else [])
        inf_c = cands + ([(fmin, 0.0)] if fmin < math.inf else [])
        lo_t, hi_t = t0, t1
        for au, bu in sup_c:
            for av, bv in inf_c:
                a = au - av
                b = bu - bv
                if b == 0.0:
                    if a > lam:
                        lo_t, hi_t = 1.0, 0.0
                elif b > 0.0:
                    hi_t = min(hi_t, (lam - a) / b)
                else:
                    lo_t = max(lo_t, (lam - a) / b)
                if lo_t > hi_t:
                    break
            if lo_t > hi_t:
                break
        if lo_t <= hi_t:
            # open-band interior; the exact endpoints are settled above
            eps = 1e-15 * max(1.0, abs(t0), abs(t1))
            push(max(lo_t, t0 + eps), min(hi_t, t1 - eps))
    return out


def _in_bands(bands, t):
    for a, b in bands:
        if a <= t <= b:
            return True
        if a > t:
            return False
    return False


def _merge_intervals(ivs):
    if not ivs:
        return []
    ivs = sorted([float(a), float(b)] for a, b in ivs if b >= a)
    if not ivs:
        return []
    out = [ivs[0]]
    for a, b in ivs[1:]:
        if a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return out


def _subtract_intervals(ivs, cover):
    out = []
    for a, b in ivs:
        parts = [[a, b]]
        for c, d in cover:
            nxt = []
            for p, q in parts:
                if d < p or c > q:
                    nxt.append([p, q])
                    continue
                if c > p:
                    nxt.append([p, min(q, c)])
                if d < q:
                    nxt.append([max(p, d), q])
            parts = nxt
            if not parts:
                break
        out.extend(parts)
    return _merge_intervals(out)


def osc_feasible(starts, values, slopes, A, B, delta, lam):
    """Can [A, B] be split into cells of length >= delta (half-open, last
    closed) with within-cell oscillation <= lam?"""
    if lam < 0:
        return False
    pc = _Pieces(starts, values, slopes, A, B)
    return _feasible(pc, A, B, delta, lam)


def _feasible(pc, A, B, delta, lam):
    if pc.gmax - pc.gmin <= lam:
        return True
    if B - A < 2.0 * delta:
        return False
    w = _tail_threshold(pc, lam)
    cap = B - delta
    if w > cap:
        return False
    bands = _feasible_bands(pc, delta, lam, A, cap)
    if not bands or not _in_bands(bands, A):
        return False
    first_hi = min(_umax(pc, A, lam), cap)
    if first_hi < A + delta:
        return False
    reach = [[A + delta, first_hi]]
    covered = [list(iv) for iv in reach]
    max_rounds = int(math.ceil((B - A) / delta)) + 4
    for _ in range(max_rounds):
        for a, b in reach:
            if max(a, w) <= min(b, cap):
                return True
        new = []
        for p, q in reach:
            for a, b in bands:
                s1, s2 = max(a, p), min(b, q)
                if s1 <= s2:
                    new.append([s1 + delta, min(s2 + delta, cap)])
            if _in_bands(bands, q):
                t = min(_umax(pc, q, lam), cap)
                if t >= q + delta:
                    new.append([q + delta, t])
        new = _subtract_intervals(_merge_intervals(new), covered)
        if not new:
            return False
        covered = _merge_intervals(covered + [list(iv) for iv in new])
        reach = new
    return False


def osc_value(starts, values, slopes, A, B, delta, rtol=1e-10, atol=1e-12):
    """Cadlag modulus omega(delta, f, [A,B]), computed by bisection over the
    threshold with an exact feasibility check per level."""
    pc = _Pieces(starts, values, slopes, A, B)
    hi = pc.gmax - pc.gmin
    if hi <= atol:
        return 0.0
    if B - A < 2.0 * delta:
        return hi
    if _feasible(pc, A, B, delta, 0.0):
        return 0.0
    lo = 0.0
    while hi - lo > max(atol, rtol * hi):
        mid = 0.5 * (lo + hi)
        if _feasible(pc, A, B, delta, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# monotone matching (generalized Skorohod distance on grids)
# ---------------------------------------------------------------------------

_MATCH_EXACT_LIMIT = 4_000_000  # above this, bisect on floats instead of costs


def match_dist(sgrid, fvals, tgrid, gvals):
    """Min over monotone grid matchings of the max node cost
    |s - t| + |f(s) - g(t)|, endpoints matched to endpoints."""
    sg = np.asarray(sgrid, dtype=np.float64)
    tg = np.asarray(tgrid, dtype=np.float64)
    fv = np.asarray(fvals, dtype=np.float64)
    gv = np.asarray(gvals, dtype=np.float64)
    n, m = len(sg), len(tg)
    cols = np.arange(m)

    def row_cost(i):
        return np.abs(sg[i] - tg) + np.abs(fv[i] - gv)

    def feasible(th):
        ok = row_cost(0) <= th
        R = np.logical_and.accumulate(ok)
        for i in range(1, n):
            ok = row_cost(i) <= th
            Bp = R.copy()
            Bp[1:] |= R[:-1]
            last_bad = np.maximum.accumulate(np.where(~ok, cols, -1))
            last_b = np.maximum.accumulate(np.where(Bp, cols, -1))
            R = ok & (last_b > last_bad)
        return bool(R[m - 1])

    corner = max(row_cost(0)[0], row_cost(n - 1)[m - 1])
    if feasible(corner):
        return float(corner)
    if n * m <= _MATCH_EXACT_LIMIT:
        C = np.abs(sg[:, None] - tg[None, :]) + np.abs(fv[:, None] - gv[None, :])
        vals = np.unique(C)
        lo = int(np.searchsorted(vals, corner))
        hi = len(vals) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if feasible(vals[mid]):
                hi = mid
            else:
                lo = mid + 1
        return float(vals[lo])
    lo, hi = float(corner), float(np.max(row_cost(0)) + np.max(np.abs(fv)) + np.max(np.abs(gv)))
    while not feasible(hi):
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# coalescing random walk engines
# ---------------------------------------------------------------------------


def _increments(cdf, offsets, u):
    return offsets[np.searchsorted(cdf, u, side="right")]


def walk_time0(cdf, offsets, span_hw, count_hw, T, snaps, rng, absorb_at=0):
    """Coalescing walks from full occupancy at time 0, no later births.

    absorb_at > 0: sites 1..absorb_at-1, walkers killed on reaching or
    crossing the boundary {0, absorb_at}.  Otherwise walkers occupy
    [-span_hw, span_hw], are dropped once outside, and counts are restricted
    to |site| <= count_hw.  Returns distinct-cluster counts per snapshot.
    """
    snaps = [int(t) for t in snaps]
    if absorb_at > 0:
        pos = np.arange(1, absorb_at, dtype=np.int64)
    else:
        pos = np.arange(-span_hw, span_hw + 1, dtype=np.int64)
    counts = np.zeros(len(snaps), dtype=np.int64)
    snap_idx = {}
    for i, t in enumerate(snaps):
        snap_idx.setdefault(t, []).append(i)

    def record(t):
        for i in snap_idx.get(t, ()):
            if absorb_at > 0:
                counts[i] = len(pos)
            else:
                counts[i] = int(np.count_nonzero(np.abs(pos) <= count_hw))

    record(0)
    tmax = max(snaps) if snaps else 0
    for t in range(1, tmax + 1):
        if len(pos):
            pos = pos + _increments(cdf, offsets, rng.random(len(pos)))
            if absorb_at > 0:
                pos = pos[(pos > 0) & (pos < absorb_at)]
            else:
                pos = pos[np.abs(pos) <= span_hw]
            pos = np.unique(pos)
        record(t)
    return counts


def walk_full(cdf, offsets, hw, T, rng, refill=True):
    """Identity-tracking coalescing walks with full spacetime occupancy.

    Walkers live on sites [-hw, hw]; every site is occupied at time 0 and
    (with refill) every site left vacant at times 1..T-1 spawns a new
    cluster.  Per step, each live cluster draws one increment (uniforms in
    ascending site order); co-located clusters merge, the survivor being the
    one with smallest (earliest birth, id).  Walkers stepping outside are
    frozen and no longer tracked.  Returns columnar event arrays.
    """
    all_sites = np.arange(-hw, hw + 1, dtype=np.int64)
    W = len(all_sites)
    sites = all_sites.copy()
    ids = np.arange(W, dtype=np.int64)

    birth_site = [all_sites.copy()]
    birth_time = [np.zeros(W, dtype=np.int64)]
    n_clusters = W
    eb_chunks = [np.zeros(W, dtype=np.int64)]
    eb = np.zeros(W, dtype=np.int64)
    absorbed_into = [-1] * W
    absorbed_time = [-1] * W
    frozen_time = [-1] * W

    rec_t = [np.zeros(W, dtype=np.int64)]
    rec_id = [ids.copy()]
    rec_site = [sites.copy()]
    mrg_t, mrg_a, mrg_s, mrg_eb, mrg_x = [], [], [], [], []

    for t in range(1, T + 1):
        new = sites + _increments(cdf, offsets, rng.random(len(sites)))
        inside = np.abs(new) <= hw
        for cid in ids[~inside]:
            frozen_time[cid] = t
        new = new[inside]
        kid = ids[inside]
        order = np.lexsort((kid, eb[kid], new))
        new = new[order]
        kid = kid[order]
        first = np.ones(len(new), dtype=bool)
        first[1:] = new[1:] != new[:-1]
        surv = kid[first]
        surv_site = new[first]
        if len(surv) < len(kid):
            group = np.cumsum(first) - 1
            absorbed = kid[~first]
            into = surv[group[~first]]
            for a, s in zip(absorbed, into):
                absorbed_into[a] = int(s)
                absorbed_time[a] = t
            mrg_t.append(np.full(len(absorbed), t, dtype=np.int64))
            mrg_a.append(absorbed)
            mrg_s.append(into)
            mrg_eb.append(eb[into])
            mrg_x.append(new[~first])
        sites, ids = surv_site, surv
        if refill and t < T and len(sites) < W:
            vacant = all_sites[~np.isin(all_sites, sites, assume_unique=True)]
            k = len(vacant)
            nid = np.arange(n_clusters, n_clusters + k, dtype=np.int64)
            n_clusters += k
            birth_site.append(vacant)
            birth_time.append(np.full(k, t, dtype=np.int64))
            eb_chunks.append(np.full(k, t, dtype=np.int64))
            eb = np.concatenate([eb, np.full(k, t, dtype=np.int64)])
            absorbed_into.extend([-1] * k)
            absorbed_time.extend([-1] * k)
            frozen_time.extend([-1] * k)
            sites = np.concatenate([sites, vacant])
            ids = np.concatenate([ids, nid])
            order = np.argsort(sites)
            sites, ids = sites[order], ids[order]
        rec_t.append(np.full(len(sites), t, dtype=np.int64))
        rec_id.append(ids.copy())
        rec_site.append(sites.copy())

    def cat(chunks):
        return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)

    return {
        "birth_site": cat(birth_site),
        "birth_time": cat(birth_time),
        "absorbed_into": np.asarray(absorbed_into, dtype=np.int64),
        "absorbed_time": np.asarray(absorbed_time, dtype=np.int64),
        "frozen_time": np.asarray(frozen_time, dtype=np.int64),
        "rec_time": cat(rec_t),
        "rec_id": cat(rec_id),
        "rec_site": cat(rec_site),
        "merge_time": cat(mrg_t),
        "merge_absorbed": cat(mrg_a),
        "merge_survivor": cat(mrg_s),
        "merge_eb": cat(mrg_eb),
        "merge_site": cat(mrg_x),
    }


def walk_insulation(cdf, offsets, n_units, m_sites, pad_units, burn_steps,
                    unit_steps, n_seeds, rng, absorb=False):
    """Batched cell-insulation probe.

    Each of n_seeds independent replicates starts from full occupancy of
    [0, S] (S spans n_units unit cells plus pads), coalesces with no births.
    After ``burn_steps`` (time 0) each cluster strictly inside a unit cell
    is locked to it; locks survive merges and break when a cluster leaves
    the open cell.  Returns bool[n_seeds, n_units]: cell had a path staying
    strictly inside over the whole [time 0, time 1] window.
    """
    m = m_sites
    off = pad_units * m
    S = (n_units + 2 * pad_units) * m
    stride = S + 2
    if absorb:
        base = np.arange(1, S, dtype=np.int64)
    else:
        base = np.arange(0, S + 1, dtype=np.int64)
    pos = (np.arange(n_seeds, dtype=np.int64)[:, None] * stride + base[None, :]).ravel()
    lock = np.full(len(pos), -1, dtype=np.int64)

    def cell_of(p):
        site = p % stride
        c = (site - off) // m
        ok = ((site - off) % m != 0) & (c >= 0) & (c < n_units)
        return np.where(ok, c, -1)

    for t in range(1, burn_steps + unit_steps + 1):
        if not len(pos):
            break
        inc = _increments(cdf, offsets, rng.random(len(pos)))
        site = pos % stride + inc
        if absorb:
            keep = (site > 0) & (site < S)
        else:
            keep = (site >= 0) & (site <= S)
        pos = (pos - pos % stride + site)[keep]
        lock = lock[keep]
        if t >= burn_steps:
            if t == burn_steps:
                lock = cell_of(pos)
            else:
                lock = np.where(cell_of(pos) == lock, lock, -1)
        order = np.lexsort((-lock, pos))
        pos, lock = pos[order], lock[order]
        first = np.ones(len(pos), dtype=bool)
        first[1:] = pos[1:] != pos[:-1]
        pos, lock = pos[first], lock[first]
    out = np.zeros((n_seeds, n_units), dtype=bool)
    good = lock >= 0
    out[pos[good] // stride, lock[good]] = True
    return out


def walk_avoidance(cdf, offsets, gap_sites, total_steps, n_runs, rng):
    """Four independent walkers started gap_sites apart.

    Returns counts of runs where (a) no ordered-neighbour pair met or
    crossed before total_steps, (b) both outer pairs (1,2) and (3,4)
    survived, (c) pair (1,2) survived.  Meeting = gap <= 0 after a step.
    """
    g = gap_sites
    pos = np.tile(np.array([0, g, 2 * g, 3 * g], dtype=np.int64), (n_runs, 1))
    alive_full = np.ones(n_runs, dtype=bool)
    alive_outer = np.ones(n_runs, dtype=bool)
    alive_12 = np.ones(n_runs, dtype=bool)
    active = np.arange(n_runs)
    for _ in range(total_steps):
        if not len(active):
            break
        u = rng.random((len(active), 4))
        inc = _increments(cdf, offsets, u.ravel()).reshape(len(active), 4)
        p = pos[active] + inc
        pos[active] = p
        g1 = p[:, 1] - p[:, 0]
        g2 = p[:, 2] - p[:, 1]
        g3 = p[:, 3] - p[:, 2]
        alive_full[active] &= (g1 > 0) & (g2 > 0) & (g3 > 0)
        alive_outer[active] &= (g1 > 0) & (g3 > 0)
        alive_12[active] &= g1 > 0
        active = active[alive_12[active]]
    return (
        int(np.count_nonzero(alive_full)),
        int(np.count_nonzero(alive_outer)),
        int(np.count_nonzero(alive_12)),
    )
