"""Piecewise-linear cadlag functions on a closed interval.

A :class:`PiecewisePath` stores finitely many linear pieces: piece ``k``
covers ``[start_k, start_{k+1})`` and the last piece runs through the
domain end inclusive.  Evaluation is right-continuous; left limits exist
everywhere.  The module also provides the two nonstandard operations the
rest of the package is built on: the cadlag oscillation modulus

    omega(delta, f, I) = inf over partitions of I into cells of length
    >= delta (half-open, last closed) of the max within-cell oscillation,

and an upper approximation of the generalized Skorohod distance between
functions on possibly different intervals,

    d(f, g) = inf over increasing homeomorphisms tau: [a,b] -> [c,d] of
    sup_s |tau(s) - s| + |f(s) - g(tau(s))|.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _backend

#: absolute tolerance for breakpoint dedup and time comparisons
TIME_TOL = 1e-12


class DomainError(ValueError):
    """Evaluation outside the function's domain."""


@dataclass(frozen=True, eq=False)
class PiecewisePath:
    """Piecewise-linear cadlag function on [domain_lo, domain_hi]."""

    domain_lo: float
    domain_hi: float
    starts: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        starts = np.ascontiguousarray(self.starts, dtype=np.float64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        slopes = np.ascontiguousarray(self.slopes, dtype=np.float64)
        if not (len(starts) == len(values) == len(slopes)) or len(starts) == 0:
            raise ValueError("segments arrays must be nonempty and aligned")
        if self.domain_hi <= self.domain_lo:
            raise ValueError("domain_hi must exceed domain_lo")
        if abs(starts[0] - self.domain_lo) > TIME_TOL:
            raise ValueError("first segment must start at domain_lo")
        starts[0] = self.domain_lo
        if np.any(np.diff(starts) <= TIME_TOL):
            raise ValueError("segment starts must be strictly increasing")
        if starts[-1] > self.domain_hi + TIME_TOL:
            raise ValueError("segment starts must not exceed domain_hi")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(slopes))):
            raise ValueError("segment data must be finite")
        for arr in (starts, values, slopes):
            arr.setflags(write=False)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slopes", slopes)

    @classmethod
    def from_segments(cls, lo, hi, segments):
        seg = sorted((float(s), float(v), float(m)) for s, v, m in segments)
        starts = np.array([s for s, _, _ in seg])
        values = np.array([v for _, v, _ in seg])
        slopes = np.array([m for _, _, m in seg])
        return cls(float(lo), float(hi), starts, values, slopes)

    @classmethod
    def constant(cls, lo, hi, value):
        return cls.from_segments(lo, hi, [(lo, value, 0.0)])

    @classmethod
    def linear(cls, lo, hi, value_at_lo, slope):
        return cls.from_segments(lo, hi, [(lo, value_at_lo, slope)])

    @classmethod
    def step(cls, lo, hi, jump_times, jump_sizes, value_at_lo=0.0):
        """Pure step function with the given jumps."""
        segs = [(lo, value_at_lo, 0.0)]
        v = value_at_lo
        for t, s in sorted(zip(jump_times, jump_sizes)):
            v += s
            segs.append((float(t), v, 0.0))
        return cls.from_segments(lo, hi, segs)

    # -- evaluation ---------------------------------------------------------

    def _index(self, s):
        idx = np.searchsorted(self.starts, s, side="right") - 1
        return np.maximum(idx, 0)

    def eval(self, s):
        """Right-continuous value at s (scalar or array)."""
        s_arr = np.asarray(s, dtype=np.float64)
        if np.any(s_arr < self.domain_lo - TIME_TOL) or np.any(s_arr > self.domain_hi + TIME_TOL):
            raise DomainError(f"evaluation outside domain [{self.domain_lo}, {self.domain_hi}]")
        idx = self._index(s_arr)
        out = self.values[idx] + self.slopes[idx] * (s_arr - self.starts[idx])
        return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out

    def eval_left(self, s):
        """Left limit at s; at domain_lo defined as eval(domain_lo)."""
        s_arr = np.asarray(s, dtype=np.float64)
        if np.any(s_arr < self.domain_lo - TIME_TOL) or np.any(s_arr > self.domain_hi + TIME_TOL):
            raise DomainError(f"evaluation outside domain [{self.domain_lo}, {self.domain_hi}]")
        idx = np.searchsorted(self.starts, s_arr - TIME_TOL, side="right") - 1
        idx = np.maximum(idx, 0)
        out = self.values[idx] + self.slopes[idx] * (s_arr - self.starts[idx])
        return float(out) if np.isscalar(s) or s_arr.ndim == 0 else out

    # -- structure ----------------------------------------------------------

    @property
    def breakpoints(self):
        return self.starts

    def jumps(self, min_size=0.0):
        """All (time, signed size) with |f(s) - f(s-)| >= min_size, ascending.

        No jump is reported at domain_lo (left limit there is f(domain_lo)
        by convention).
        """
        if min_size < 0:
            raise ValueError("min_size must be >= 0")
        if len(self.starts) == 1:
            return []
        left = self.values[:-1] + self.slopes[:-1] * np.diff(self.starts)
        sizes = self.values[1:] - left
        out = [
            (float(t), float(sz))
            for t, sz in zip(self.starts[1:], sizes)
            if abs(sz) >= min_size and abs(sz) > 0.0
        ]
        return out

    def max_abs_slope(self):
        return float(np.max(np.abs(self.slopes)))

    def extrema(self):
        """(min, max) of f over its whole domain (exact per segment)."""
        ends = np.append(self.starts[1:], self.domain_hi)
        left = self.values + self.slopes * (ends - self.starts)
        return (
            float(min(self.values.min(), left.min())),
            float(max(self.values.max(), left.max())),
        )

    def equals(self, other, tol=1e-9):
        """Exact pointwise equality (checked at breakpoints and midpoints)."""
        if (
            abs(self.domain_lo - other.domain_lo) > tol
            or abs(self.domain_hi - other.domain_hi) > tol
        ):
            return False
        pts = np.union1d(self.starts, other.starts)
        pts = np.clip(pts, self.domain_lo, self.domain_hi)
        pts = np.union1d(np.union1d(pts, 0.5 * (pts[1:] + pts[:-1])), [self.domain_hi])
        return bool(np.all(np.abs(self.eval(pts) - other.eval(pts)) <= tol))

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        return {
            "lo": self.domain_lo,
            "hi": self.domain_hi,
            "segments": [
                [float(s), float(v), float(m)]
                for s, v, m in zip(self.starts, self.values, self.slopes)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        return cls.from_segments(d["lo"], d["hi"], d["segments"])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def restrict(f: PiecewisePath, c: float, d: float) -> PiecewisePath:
    """Restriction of f to [c, d] (right-continuous at the cut)."""
    if not (f.domain_lo - TIME_TOL <= c < d <= f.domain_hi + TIME_TOL):
        raise ValueError(f"invalid restriction interval [{c}, {d}]")
    c = max(c, f.domain_lo)
    d = min(d, f.domain_hi)
    keep = (f.starts > c + TIME_TOL) & (f.starts < d - TIME_TOL)
    starts = np.concatenate([[c], f.starts[keep]])
    idx = np.maximum(np.searchsorted(f.starts, starts, side="right") - 1, 0)
    values = f.values[idx] + f.slopes[idx] * (starts - f.starts[idx])
    slopes = f.slopes[idx]
    return PiecewisePath(c, d, starts, values, slopes)


def extend(f: PiecewisePath, c: float, d: float, new_lo: float, new_hi: float,
           pre_slope: float, post_slope: float) -> PiecewisePath:
    """g = f on [c,d], linear with pre_slope through (c, f(c)) on [new_lo, c)
    and with post_slope through (d, f(d)) on (d, new_hi]."""
    if not (f.domain_lo - TIME_TOL <= c < d <= f.domain_hi + TIME_TOL):
        raise ValueError(f"[{c}, {d}] not inside the domain")
    if not (new_lo < c and d < new_hi):
        raise ValueError("extension must strictly enclose [c, d]")
    r = restrict(f, c, d)
    fd = r.eval(d)
    starts = [new_lo]
    values = [r.eval(c) + pre_slope * (new_lo - c)]
    slopes = [pre_slope]
    for s, v, m in zip(r.starts, r.values, r.slopes):
        if s >= d - TIME_TOL:
            continue
        starts.append(s)
        values.append(v)
        slopes.append(m)
    starts.append(d)
    values.append(fd)
    slopes.append(post_slope)
    return PiecewisePath(new_lo, new_hi, np.array(starts), np.array(values), np.array(slopes))


def extend_flat(f: PiecewisePath, c: float, d: float,
                pre_slope: float = 0.0, post_slope: float = 0.0) -> PiecewisePath:
    """Extension of f|[c,d] to [c-1, d+1] with the given boundary slopes."""
    return extend(f, c, d, c - 1.0, d + 1.0, pre_slope, post_slope)


def jumps_of(f: PiecewisePath, min_size: float = 0.0):
    """All jumps of f with |size| >= min_size, ascending (time, signed size)."""
    return f.jumps(min_size)


def oscillation(f: PiecewisePath, delta: float, lo: float | None = None,
                hi: float | None = None, rtol: float = 1e-10) -> float:
    """Cadlag modulus omega(delta, f, [lo, hi]).

    Exact up to the bisection tolerance: the feasibility check for a given
    oscillation level solves the cell-boundary reachability problem in
    closed form per linear piece.
    """
    A = f.domain_lo if lo is None else float(lo)
    B = f.domain_hi if hi is None else float(hi)
    if not (f.domain_lo - TIME_TOL <= A < B <= f.domain_hi + TIME_TOL):
        raise ValueError("interval not inside the domain")
    if not (0.0 < delta <= (B - A) * (1 + 1e-12)):
        raise ValueError("need 0 < delta <= |I|")
    return float(_backend.osc_value(f.starts, f.values, f.slopes, A, B, float(delta), rtol))


def oscillation_at_most(f: PiecewisePath, delta: float, bound: float,
                        lo: float | None = None, hi: float | None = None) -> bool:
    """Whether omega(delta, f, [lo, hi]) <= bound, decided exactly."""
    A = f.domain_lo if lo is None else float(lo)
    B = f.domain_hi if hi is None else float(hi)
    if not (0.0 < delta <= (B - A) * (1 + 1e-12)):
        raise ValueError("need 0 < delta <= |I|")
    return bool(_backend.osc_feasible(f.starts, f.values, f.slopes, A, B,
                                      float(delta), float(bound)))


def _matching_grid(f: PiecewisePath, resolution: float) -> np.ndarray:
    n = max(int(np.ceil((f.domain_hi - f.domain_lo) / resolution)), 1)
    uniform = np.linspace(f.domain_lo, f.domain_hi, n + 1)
    grid = np.union1d(np.round(uniform, 15), f.starts)
    grid = grid[(grid >= f.domain_lo) & (grid <= f.domain_hi)]
    if abs(grid[-1] - f.domain_hi) > TIME_TOL:
        grid = np.append(grid, f.domain_hi)
    # dedup within tolerance
    keep = np.ones(len(grid), dtype=bool)
    keep[1:] = np.diff(grid) > TIME_TOL
    return grid[keep]


def path_dist(f: PiecewisePath, g: PiecewisePath, resolution: float) -> float:
    """Upper approximation of the generalized Skorohod distance d(f, g).

    Monotone-matching dynamic program over the union of both functions'
    breakpoints and a uniform grid of spacing <= resolution; the reported
    value is within resolution*(1 + max slope) of the true infimum and
    exact for step functions whose jump times are grid points.  Symmetric
    by construction (the matching recurrence is transpose-invariant).
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    sg = _matching_grid(f, resolution)
    tg = _matching_grid(g, resolution)
    return float(_backend.match_dist(sg, f.eval(sg), tg, g.eval(tg)))


def path_dist_tol(f: PiecewisePath, g: PiecewisePath, resolution: float) -> float:
    """Reported tolerance of path_dist at this resolution."""
    return resolution * (1.0 + max(f.max_abs_slope(), g.max_abs_slope()))
