"""Coalescing random walks with heavy-tailed kernels and their
renormalization into aged-path collections.

Walkers occupy every site of a buffered window at time 0 and every site
left vacant at later integer times (the index-set rule: a cluster is born
only on unoccupied sites).  Co-located clusters merge; the survivor is the
one with the earliest birth (ties by id), so a live cluster's earliest
birth never changes and a path's age jumps exactly at the half-integer
times following an absorption into an older cluster.

Renormalization at level N maps positions to S / N^(1/alpha) and times and
ages to multiples of 1/N; gamma then jumps on the integer grid k/N and the
age on the half-integer grid (k+1/2)/N, so the two never jump together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .agedpath import AgedPath
from .cadlag import TIME_TOL, PiecewisePath
from .collection import PathCollection


def _zeta(s: float, n_direct: int = 200_000) -> float:
    """Riemann zeta for s > 1 via direct sum plus Euler-Maclaurin tail."""
    n = np.arange(1, n_direct + 1, dtype=np.float64)
    head = float(np.sum(n ** (-s)))
    N = float(n_direct)
    tail = N ** (1.0 - s) / (s - 1.0) - 0.5 * N ** (-s) + s / 12.0 * N ** (-s - 1.0)
    return head + tail


@dataclass(frozen=True)
class Kernel:
    """Symmetric step distribution on {-radius..radius}."""

    alpha: float
    radius: int
    offsets: np.ndarray  # support, ascending
    pmf: np.ndarray
    tail_constant: float
    cdf: np.ndarray = field(repr=False)

    def sample(self, rng, n):
        u = rng.random(n)
        return self.offsets[np.searchsorted(self.cdf, u, side="right")]

    def mean(self):
        return float(np.sum(self.offsets * self.pmf))

    def variance(self):
        return float(np.sum(self.offsets.astype(float) ** 2 * self.pmf))


def build_kernel(alpha: float, radius: int = 1) -> Kernel:
    """Heavy-tailed symmetric kernel with pmf(n) = C |n|^-(1+alpha) for
    1 <= |n| <= radius, where C is the full-lattice normalizer; the
    truncated leftover mass sits on pmf(0).  For alpha = 2 the kernel is
    the lazy nearest-neighbour walk."""
    if not (1.0 < alpha <= 2.0):
        raise ValueError("need alpha in (1, 2]")
    if radius < 1:
        raise ValueError("need radius >= 1")
    if alpha == 2.0:
        offsets = np.array([-1, 0, 1], dtype=np.int64)
        pmf = np.array([0.25, 0.5, 0.25])
        tail_constant = 0.0
    else:
        C = 1.0 / (2.0 * _zeta(1.0 + alpha))
        n = np.arange(1, radius + 1, dtype=np.float64)
        w = C * n ** (-(1.0 + alpha))
        p0 = 1.0 - 2.0 * float(w.sum())
        offsets = np.arange(-radius, radius + 1, dtype=np.int64)
        pmf = np.concatenate([w[::-1], [p0], w])
        tail_constant = C
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return Kernel(alpha, int(radius) if alpha < 2.0 else 1, offsets, pmf,
                  tail_constant, cdf)


@dataclass(frozen=True, eq=False)
class WalkSystem:
    """Immutable record of one coalescing-walk simulation.

    Columnar storage: ``rec_*`` hold, for every time step, the live
    clusters in ascending site order; ``birth_*``, ``absorbed_*`` and
    ``frozen_time`` are per-cluster; the merge log lists
    (time, absorbed, survivor) with the survivor's earliest birth.
    """

    kernel: Kernel
    L: int
    T: int
    buffer: int
    seed: int
    births: str
    raw: dict = field(repr=False)

    def __post_init__(self):
        # time offsets into the recording arrays (recording is time-ordered)
        object.__setattr__(self, "_t_off",
                           np.searchsorted(self.raw["rec_time"], np.arange(self.T + 2)))
        order = np.lexsort((self.raw["rec_time"], self.raw["rec_id"]))
        object.__setattr__(self, "_by_id", order)
        object.__setattr__(self, "_id_off",
                           np.searchsorted(self.raw["rec_id"][order],
                                           np.arange(self.n_clusters + 1)))

    @property
    def n_clusters(self):
        return len(self.raw["birth_time"])

    @property
    def birth_site(self):
        return self.raw["birth_site"]

    @property
    def birth_time(self):
        return self.raw["birth_time"]

    @property
    def merge_log(self):
        r = self.raw
        return list(zip(r["merge_time"].tolist(), r["merge_absorbed"].tolist(),
                        r["merge_survivor"].tolist()))

    def occupancy(self, t: int) -> dict:
        """site -> cluster id at integer time t."""
        lo, hi = self._t_off[t], self._t_off[t + 1]
        r = self.raw
        return dict(zip(r["rec_site"][lo:hi].tolist(), r["rec_id"][lo:hi].tolist()))

    def own_span(self, cid: int):
        """(times, sites) recorded while cid was a live distinct cluster."""
        lo, hi = self._id_off[cid], self._id_off[cid + 1]
        idx = self._by_id[lo:hi]
        return self.raw["rec_time"][idx], self.raw["rec_site"][idx]

    def chain(self, cid: int):
        """[(carrier, handoff_time), ...] following absorptions; the final
        carrier has handoff_time = -1."""
        out = []
        r = self.raw
        w = cid
        while True:
            m = int(r["absorbed_time"][w])
            out.append((w, m))
            if m < 0:
                return out
            w = int(r["absorbed_into"][w])

    def chain_frozen(self, cid: int) -> bool:
        final = self.chain(cid)[-1][0]
        return int(self.raw["frozen_time"][final]) >= 0

    def trajectory(self, cid: int):
        """(times, sites) of the path born as cid, following its carriers
        through to T (or to the final carrier's freeze)."""
        times, sites = [], []
        start = int(self.raw["birth_time"][cid])
        for w, handoff in self.chain(cid):
            tw, sw = self.own_span(w)
            keep = tw >= start
            times.append(tw[keep])
            sites.append(sw[keep])
            start = handoff
        return np.concatenate(times), np.concatenate(sites)

    def age_events(self, cid: int):
        """[(merge time, new earliest birth), ...] along cid's chain, only
        where the carried earliest birth strictly decreases."""
        r = self.raw
        out = []
        cur = int(r["birth_time"][cid])
        for w, handoff in self.chain(cid):
            if handoff < 0:
                break
            nxt = int(r["birth_time"][r["absorbed_into"][w]])
            if nxt < cur:
                out.append((handoff, nxt))
                cur = nxt
        return out


def simulate(kernel: Kernel, L: int, T: int, buffer: int, seed: int,
             births: str = "all") -> WalkSystem:
    """Run the coalescing system on sites [-L-buffer, L+buffer] for T steps.

    births="all": every vacant site at times 0..T-1 spawns a cluster
    (full spacetime occupancy); births="time0": initial occupancy only.
    Walkers stepping outside the buffered window are frozen and flagged.
    Deterministic given all arguments.
    """
    if L < 1 or T < 1:
        raise ValueError("need L, T >= 1")
    if buffer < kernel.radius:
        raise ValueError("need buffer >= kernel radius")
    if births not in ("all", "time0"):
        raise ValueError("births must be 'all' or 'time0'")
    rng = np.random.default_rng(seed)
    raw = _backend.walk_full(kernel.cdf, kernel.offsets, L + buffer, T, rng,
                             refill=(births == "all"))
    return WalkSystem(kernel, L, T, buffer, seed, births, raw)


def cluster_ages(ws: WalkSystem, cid: int) -> PiecewisePath:
    """Age of the path born as cluster cid, on the walk-time axis [birth, T]:
    slope one, jumping up at m + 1/2 for each absorption at time m into an
    older cluster."""
    if not (0 <= cid < ws.n_clusters):
        raise KeyError(f"unknown cluster {cid}")
    r = int(ws.raw["birth_time"][cid])
    segs = [(float(r), 0.0, 1.0)]
    for m, eb in ws.age_events(cid):
        s = m + 0.5
        if s >= ws.T:
            break
        segs.append((s, s - eb, 1.0))
    return PiecewisePath.from_segments(float(r), float(ws.T), segs)


def renormalize(ws: WalkSystem, N: int, origin_shift: float = 0.0,
                eval_times=None, include_frozen: bool = False,
                label: str = "") -> PathCollection:
    """Gamma^N: one aged path per born cluster, with space scaled by
    N^(-1/alpha) and time/age by 1/N.

    With eval_times given (renormalized t values >= 1), only clusters that
    can carry a maximal Pi_t projection at one of those times are
    materialized: a cluster qualifies if its own recorded span enters the
    spacetime box of some t with own age at least 2^-t.  Clusters whose
    projection would qualify only through a later carrier are always
    dominated by that carrier under the maximality filter, so the
    projections of the filtered collection agree with the full ones at the
    given times.  Paths whose carrier chain hits the frozen boundary are
    dropped unless include_frozen is set.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    if ws.T % N != 0:
        raise ValueError("N must divide T for a clean horizon")
    horizon = ws.T / N - origin_shift
    scale = float(N) ** (1.0 / ws.kernel.alpha)
    r = ws.raw
    nc = ws.n_clusters
    if eval_times is None:
        selected = np.ones(nc, dtype=bool)
    else:
        # a path can carry a maximal projection at t only if it qualifies on
        # its own age track: either on its recorded span, or during the
        # half-step handoff window after its absorption (position already the
        # survivor's, age still its own until the jump at m + 1/2).  The
        # bounds err on the inclusive side; extra paths only feed the filter.
        selected = np.zeros(nc, dtype=bool)
        own_age = r["rec_time"] - r["birth_time"][r["rec_id"]]
        m_age = r["merge_time"] + 0.5 - r["birth_time"][r["merge_absorbed"]]
        for t in eval_times:
            t = float(t)
            if t < 1.0 or t > horizon + TIME_TOL:
                raise ValueError("eval_times must lie in [1, horizon]")
            tau = int(np.floor((t + origin_shift) * N + 1e-9)) + 1
            lo_step = max(int(np.floor((-t + origin_shift) * N)) - 1, 0)
            thr = N * 2.0 ** (-t) * (1.0 - 1e-12) - 1e-9
            bound = t * scale + 1.0
            mask = (
                (r["rec_time"] >= lo_step)
                & (r["rec_time"] <= tau)
                & (own_age >= thr)
                & (np.abs(r["rec_site"]) <= bound)
            )
            selected[r["rec_id"][mask]] = True
            mmask = (
                (r["merge_time"] >= lo_step)
                & (r["merge_time"] <= tau)
                & (m_age >= thr)
                & (np.abs(r["merge_site"]) <= bound)
            )
            selected[r["merge_absorbed"][mmask]] = True
    paths = []
    for cid in np.nonzero(selected)[0]:
        rb = int(r["birth_time"][cid])
        if rb >= ws.T:
            continue
        if not include_frozen and ws.chain_frozen(cid):
            continue
        sigma = rb / N - origin_shift
        dom_lo = (rb + 0.5) / N - origin_shift
        times, sites = ws.trajectory(cid)
        if len(times) == 0 or times[-1] != ws.T:
            continue  # frozen chain (only reachable with include_frozen)
        starts = [dom_lo]
        values = [sites[0] / scale]
        change = np.nonzero(sites[1:] != sites[:-1])[0]
        for k in change:
            starts.append(float(times[k + 1]) / N - origin_shift)
            values.append(sites[k + 1] / scale)
        gamma = PiecewisePath(dom_lo, horizon, np.asarray(starts, dtype=float),
                              np.asarray(values, dtype=float),
                              np.zeros(len(starts)))
        asegs = [(dom_lo, 0.5 / N, 1.0)]
        for m, eb in ws.age_events(cid):
            s = (m + 0.5) / N - origin_shift
            if s >= horizon - TIME_TOL:
                break
            asegs.append((s, (m + 0.5 - eb) / N, 1.0))
        age = PiecewisePath.from_segments(dom_lo, horizon, asegs)
        paths.append(AgedPath(sigma, gamma, age))
    return PathCollection(tuple(paths), horizon, label, grid_step=1.0 / N)
