"""Aged paths: a spatial trajectory paired with an age function.

An :class:`AgedPath` is a pair of cadlag functions (gamma, age) on an open
interval (sigma, infinity), represented finitely on [sigma + eps0, horizon]
where eps0 > 0 is one representation micro-step (1/(2N) for renormalized
walk data).  The defining requirements are

  (i)   age vanishes at birth: age(sigma + eps0) <= eps0 (+ tol),
  (ii)  age grows at least at unit rate and jumps only upward,
  (iii) gamma and age never jump at the same time.

The window projection keeps the part of a path that is inside the
spacetime box [-t, t] with age at least 2^-t:

    b_t = inf { s in [-t, t] : gamma(s) in [-t, t], age(s) >= 2^-t }

and the truncation restricts both functions to [b_t, t].
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cadlag import TIME_TOL, PiecewisePath, extend, restrict

#: numerical slack for invariant checks
VALIDATE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    clause: str
    time: float
    message: str


@dataclass(frozen=True, eq=False)
class AgedPath:
    """Aged path (gamma, age) born at sigma, represented on
    [sigma + eps0, horizon]."""

    sigma: float
    gamma: PiecewisePath
    age: PiecewisePath

    def __post_init__(self):
        g, a = self.gamma, self.age
        if abs(g.domain_lo - a.domain_lo) > TIME_TOL or abs(g.domain_hi - a.domain_hi) > TIME_TOL:
            raise ValueError("gamma and age must share a domain")
        if g.domain_lo < self.sigma - TIME_TOL:
            raise ValueError("domain must start at or after the birth time")

    @property
    def eps0(self):
        return self.gamma.domain_lo - self.sigma

    @property
    def horizon(self):
        return self.gamma.domain_hi

    @property
    def domain_lo(self):
        return self.gamma.domain_lo

    def to_dict(self):
        return {"sigma": self.sigma, "gamma": self.gamma.to_dict(), "age": self.age.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["sigma"]), PiecewisePath.from_dict(d["gamma"]),
                   PiecewisePath.from_dict(d["age"]))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True, eq=False)
class TruncatedPath:
    """Result of the window projection: (gamma, age) restricted to [b, t]."""

    b: float
    t: float
    gamma_t: PiecewisePath
    age_t: PiecewisePath

    def equals(self, other: "TruncatedPath", tol: float = 1e-9) -> bool:
        return (
            abs(self.b - other.b) <= tol
            and abs(self.t - other.t) <= tol
            and self.gamma_t.equals(other.gamma_t, tol)
            and self.age_t.equals(other.age_t, tol)
        )


def validate(p: AgedPath, tol: float = VALIDATE_TOL) -> list[Violation]:
    """Check the three aged-path requirements; empty list iff all hold."""
    out = []
    a = p.age
    if a.eval(a.domain_lo) > p.eps0 + tol:
        out.append(Violation("birth-age", a.domain_lo,
                             f"age at domain start is {a.eval(a.domain_lo):.6g}, "
                             f"exceeds eps0={p.eps0:.6g}"))
    bad = np.nonzero(a.slopes < 1.0 - tol)[0]
    for k in bad:
        out.append(Violation("unit-growth", float(a.starts[k]),
                             f"age slope {a.slopes[k]:.6g} below 1"))
    for s, size in a.jumps(0.0):
        if size < -tol:
            out.append(Violation("unit-growth", s, f"downward age jump {size:.6g}"))
    a_jumps = [s for s, sz in a.jumps(0.0) if abs(sz) > tol]
    g_jumps = [s for s, sz in p.gamma.jumps(0.0) if abs(sz) > tol]
    for s in g_jumps:
        for s2 in a_jumps:
            if abs(s - s2) <= tol:
                out.append(Violation("simultaneous-jumps", s,
                                     "gamma and age jump at the same time"))
    return out


def _joint_breaks(p: AgedPath, lo: float, hi: float) -> np.ndarray:
    pts = np.union1d(p.gamma.starts, p.age.starts)
    pts = pts[(pts > lo + TIME_TOL) & (pts < hi - TIME_TOL)]
    return np.concatenate([[lo], pts, [hi]])


def _first_qualifying_time(p: AgedPath, lo: float, hi: float, t: float, thr: float):
    """Least s in [lo, hi] with |gamma(s)| <= t and age(s) >= thr, scanning
    the joint linear pieces in closed form (vectorized); None if none."""
    brk = _joint_breaks(p, lo, hi)
    u = brk[:-1]
    v = brk[1:]
    ig = np.maximum(np.searchsorted(p.gamma.starts, u, side="right") - 1, 0)
    ia = np.maximum(np.searchsorted(p.age.starts, u, side="right") - 1, 0)
    gv = p.gamma.values[ig] + p.gamma.slopes[ig] * (u - p.gamma.starts[ig])
    av = p.age.values[ia] + p.age.slopes[ia] * (u - p.age.starts[ia])
    gm = p.gamma.slopes[ig]
    am = p.age.slopes[ia]
    slo = u.copy()
    shi = v.copy()
    # constraints coef * (s - u) <= bound for: gamma <= t, -gamma <= t, age >= thr
    for coef, bound in ((gm, t - gv), (-gm, t + gv), (-am, av - thr)):
        pos = coef > 0
        neg = coef < 0
        zer = ~pos & ~neg
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing = u + bound / coef
        shi[pos] = np.minimum(shi[pos], crossing[pos])
        slo[neg] = np.maximum(slo[neg], crossing[neg])
        shi[zer & (bound < 0.0)] = -np.inf
    feas = slo <= shi
    feas[:-1] &= slo[:-1] < v[:-1]  # half-open pieces; the last is closed
    idx = np.nonzero(feas)[0]
    if len(idx) == 0:
        return None
    return float(slo[idx[0]])


def _snap_to_breakpoints(p: AgedPath, s: float, t: float, thr: float):
    """Snap s onto a nearby representation breakpoint when it lands within
    float noise of one, re-verifying the window conditions there.

    When the age crossing coincides with a jump time of gamma, different
    paths sharing the same walker thread can otherwise disagree about b_t
    at the last bit and straddle the jump; breakpoint floats are computed
    identically from the underlying grid, so snapping restores agreement.
    """
    tol = 1e-9 * max(1.0, abs(s))
    best = None
    for arr in (p.gamma.starts, p.age.starts):
        i = int(np.searchsorted(arr, s))
        for j in (i - 1, i):
            if 0 <= j < len(arr) and abs(arr[j] - s) <= tol:
                c = float(arr[j])
                if best is None or abs(c - s) < abs(best - s):
                    best = c
    if best is None:
        return s
    if abs(p.gamma.eval(best)) <= t + 1e-9 and p.age.eval(best) >= thr - 1e-9:
        return best
    return s


def birth_window(p: AgedPath, t: float, threshold: float | None = None):
    """b_t: least s in [-t, t] (within the represented domain) where gamma
    is inside [-t, t] and age is at least the threshold (default 2^-t).
    Returns None when no such time exists."""
    if t < 1.0:
        raise ValueError("need t >= 1")
    if t > p.horizon + TIME_TOL:
        raise ValueError("t beyond the represented horizon")
    thr = 2.0 ** (-t) if threshold is None else float(threshold)
    lo = max(-t, p.domain_lo)
    hi = min(t, p.horizon)
    if lo >= hi - TIME_TOL:
        return None
    s = _first_qualifying_time(p, lo, hi, t, thr)
    if s is None:
        return None
    return float(_snap_to_breakpoints(p, s, t, thr))


def project(p: AgedPath, t: float):
    """Pi_t: truncation of p to [b_t, t], or None when the window is empty."""
    b = birth_window(p, t)
    if b is None or t - b <= TIME_TOL:
        return None
    return TruncatedPath(b, t, restrict(p.gamma, b, t), restrict(p.age, b, t))


def project_h(p: AgedPath, t: float, h_at_t: float):
    """Pi_t with the age threshold h(t) in place of 2^-t."""
    if h_at_t <= 0:
        raise ValueError("threshold must be positive")
    b = birth_window(p, t, threshold=h_at_t)
    if b is None or t - b <= TIME_TOL:
        return None
    return TruncatedPath(b, t, restrict(p.gamma, b, t), restrict(p.age, b, t))


def canonical_extension(tp: TruncatedPath):
    """(gamma^t, age^t) on [-(t+1), t+1]: gamma held constant outside
    [b_t, t], age continued linearly with slope one.  The age extension may
    go below the window threshold (even negative) on the left; it is only
    ever used as oscillation input."""
    t = tp.t
    g = extend(tp.gamma_t, tp.b, t, -(t + 1.0), t + 1.0, 0.0, 0.0)
    a = extend(tp.age_t, tp.b, t, -(t + 1.0), t + 1.0, 1.0, 1.0)
    return g, a


def first_age_time(p: AgedPath, level: float):
    """lambda(level) = inf { s : age(s) >= level }, None if never reached."""
    if level <= 0:
        raise ValueError("level must be positive")
    a = p.age
    if a.eval(a.domain_lo) >= level:
        return float(a.domain_lo)
    ends = np.append(a.starts[1:], a.domain_hi)
    last = len(a.starts) - 1
    for k in range(len(a.starts)):
        v0 = float(a.values[k])
        m = float(a.slopes[k])
        u, v = float(a.starts[k]), float(ends[k])
        if v0 >= level:
            return u
        if m > 0:
            s = u + (level - v0) / m
            if k == last:
                if s <= v + TIME_TOL:
                    return min(s, v)
            elif s < v - TIME_TOL:
                return s
            # a crossing exactly at the piece end is settled by the next piece
    return None
