"""Finite collections of aged paths and the web metrics.

The collection-level distance integrates the capped Hausdorff distance
between window projections,

    d_X(G, G') = int_1^inf e^{-t} (d(Pi_t G, Pi_t G') ^ 1) dt,

computed here by midpoint quadrature on [1, t_max] with the midpoints
jittered off integers and dyadic corner values (those form the countable
exceptional set where the projections may be discontinuous in t).  The
truncated tail contributes at most e^{-t_max}, reported alongside.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .agedpath import AgedPath, TruncatedPath, project, project_h
from .cadlag import path_dist

#: pointwise tolerance for the maximality filter's agreement test
AGREE_TOL = 1e-9

#: irrational fraction of the cell width added to quadrature midpoints
_JITTER = (math.sqrt(2.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class PathCollection:
    """Finite list of aged paths sharing a horizon.

    grid_step records the representation resolution of the age data
    (1/N for renormalized walks, 0 for exact constructions); it is used by
    the compactness checkers to refuse to certify conditions finer than
    the data.
    """

    paths: tuple
    horizon: float
    label: str = ""
    grid_step: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        for p in self.paths:
            if abs(p.horizon - self.horizon) > 1e-9:
                raise ValueError("all paths must share the collection horizon")

    def __len__(self):
        return len(self.paths)

    def to_dict(self):
        return {
            "label": self.label,
            "horizon": self.horizon,
            "grid_step": self.grid_step,
            "paths": [p.to_dict() for p in self.paths],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(AgedPath.from_dict(x) for x in d["paths"]),
            float(d["horizon"]),
            d.get("label", ""),
            float(d.get("grid_step", 0.0)),
        )

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


def project_collection(G: PathCollection, t: float, h_at_t: float | None = None):
    """Maximal elements of Pi_t(G): project every path, drop empties, drop a
    truncation when another one agrees with it on its whole domain but
    enters the window earlier, and deduplicate exact equals."""
    if not (1.0 <= t <= G.horizon + 1e-12):
        raise ValueError("need 1 <= t <= horizon")
    tps = []
    for p in G.paths:
        tp = project(p, t) if h_at_t is None else project_h(p, t, h_at_t)
        if tp is not None:
            tps.append(tp)
    return maximal_truncations(tps)


def _agrees_on(tp: TruncatedPath, tq: TruncatedPath, tol=AGREE_TOL):
    """Does tq agree with tp on [tp.b, tp.t] (pointwise, both coordinates)?
    tq must extend at least as far left (tq.b <= tp.b)."""
    from .cadlag import restrict

    if tq.b > tp.b + tol:
        return False
    ga = restrict(tq.gamma_t, tp.b, tp.t) if tq.b < tp.b - tol else tq.gamma_t
    aa = restrict(tq.age_t, tp.b, tp.t) if tq.b < tp.b - tol else tq.age_t
    return ga.equals(tp.gamma_t, tol) and aa.equals(tp.age_t, tol)


def maximal_truncations(tps: list, tol=AGREE_TOL, return_groups=False):
    """Apply the maximality filter and dedupe exact equals (keep first).

    Pairs are prefiltered on probe values (both coordinates at a few points
    of the candidate's domain); the exact pointwise agreement test runs only
    on probe matches.  With return_groups, also returns, per kept
    truncation, the indices of all inputs equal to it.
    """
    m = len(tps)
    if m <= 1:
        if return_groups:
            return list(tps), [[0]] if m else []
        return list(tps)
    t = tps[0].t
    b = np.array([tp.b for tp in tps])
    fr = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
    pts = b[:, None] + fr[None, :] * (t - b)[:, None]  # probe points per tp
    flat = pts.ravel()
    GV = np.empty((m, m * len(fr)))
    AV = np.empty((m, m * len(fr)))
    for j, tq in enumerate(tps):
        clipped = np.clip(flat, tq.b, t)
        GV[j] = tq.gamma_t.eval(clipped)
        AV[j] = tq.age_t.eval(clipped)
    GV = GV.reshape(m, m, len(fr))
    AV = AV.reshape(m, m, len(fr))
    keep = []
    keep_idx = []
    for i, tp in enumerate(tps):
        earlier = b < b[i] - tol
        close = (
            np.all(np.abs(GV[:, i, :] - GV[i, i, :]) <= tol, axis=1)
            & np.all(np.abs(AV[:, i, :] - AV[i, i, :]) <= tol, axis=1)
        )
        dominated = False
        for j in np.nonzero(earlier & close)[0]:
            if _agrees_on(tp, tps[j], tol):
                dominated = True
                break
        if dominated:
            continue
        dup = False
        for j in keep_idx:
            if (
                abs(b[j] - b[i]) <= tol
                and np.all(np.abs(GV[j, i, :] - GV[i, i, :]) <= tol)
                and np.all(np.abs(AV[j, i, :] - AV[i, i, :]) <= tol)
                and tp.equals(tps[j], tol)
            ):
                dup = True
                break
        if not dup:
            keep.append(tp)
            keep_idx.append(i)
    if not return_groups:
        return keep
    groups = [[] for _ in keep]
    for j in range(m):
        for gi, i in enumerate(keep_idx):
            if (
                abs(b[j] - b[i]) <= tol
                and np.all(np.abs(GV[j, i, :] - GV[i, i, :]) <= tol)
                and np.all(np.abs(AV[j, i, :] - AV[i, i, :]) <= tol)
                and tps[j].equals(keep[gi], tol)
            ):
                groups[gi].append(j)
                break
    return keep, groups


def pair_dist(x: TruncatedPath, y: TruncatedPath, resolution: float) -> float:
    """d((gamma,a),(gamma',a')) = d(gamma,gamma') v d(a,a')."""
    return max(
        path_dist(x.gamma_t, y.gamma_t, resolution),
        path_dist(x.age_t, y.age_t, resolution),
    )


def hausdorff(A: list, B: list, resolution: float) -> float:
    """Two-sided Hausdorff distance under pair_dist.

    Conventions: d(empty, empty) = 0 and d(A, empty) = 1 for nonempty A
    (the d_X integrand is capped at 1, so 1 acts as the diameter).
    """
    if not A and not B:
        return 0.0
    if not A or not B:
        return 1.0
    D = np.array([[pair_dist(a, b, resolution) for b in B] for a in A])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def quadrature_times(t_max: float, n_cells: int) -> np.ndarray:
    """Midpoints on [1, t_max], shifted by an irrational fraction of the
    cell width so they avoid integers and dyadic corner values a.s.  The
    shift alternates in sign so it cancels at first order in the cell
    width."""
    w = (t_max - 1.0) / n_cells
    k = np.arange(n_cells)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    return 1.0 + (k + 0.5 + sign * _JITTER) * w


def web_dist(G1: PathCollection, G2: PathCollection, t_max: float, n_cells: int,
             resolution: float):
    """Quadrature estimate of d_X(G1, G2) on [1, t_max].

    Returns (value, tail_bound); the integrand is capped at 1, so the
    discarded tail is at most e^{-t_max}.
    """
    if t_max < 1.0:
        raise ValueError("need t_max >= 1")
    if t_max > min(G1.horizon, G2.horizon) + 1e-12:
        raise ValueError("t_max beyond a collection horizon")
    if n_cells < 1:
        raise ValueError("need n_cells >= 1")
    w = (t_max - 1.0) / n_cells
    total = 0.0
    for t in quadrature_times(t_max, n_cells):
        d = hausdorff(project_collection(G1, t), project_collection(G2, t), resolution)
        total += math.exp(-t) * min(d, 1.0) * w
    return total, math.exp(-t_max)


def check_h_spec(h_spec, t_max: float, n_sample: int = 33):
    """Argument check for threshold functions: positive and decreasing on a
    sample grid of [1, t_max]."""
    ts = np.linspace(1.0, max(t_max, 1.0 + 1e-9), n_sample)
    vals = np.array([float(h_spec(t)) for t in ts])
    if np.any(vals <= 0.0):
        raise ValueError("h_spec must be positive on [1, t_max]")
    if np.any(np.diff(vals) > 1e-12):
        raise ValueError("h_spec must be decreasing on [1, t_max]")


def web_dist_h(G1: PathCollection, G2: PathCollection, h_spec, t_max: float,
               n_cells: int, resolution: float):
    """d_X with the projection threshold h(t) in place of 2^-t."""
    if t_max < 1.0:
        raise ValueError("need t_max >= 1")
    if n_cells < 1:
        raise ValueError("need n_cells >= 1")
    check_h_spec(h_spec, t_max)
    w = (t_max - 1.0) / n_cells
    total = 0.0
    for t in quadrature_times(t_max, n_cells):
        h = float(h_spec(t))
        d = hausdorff(
            project_collection(G1, t, h_at_t=h),
            project_collection(G2, t, h_at_t=h),
            resolution,
        )
        total += math.exp(-t) * min(d, 1.0) * w
    return total, math.exp(-t_max)
