"""Executable checkers for the five compactness conditions and an
empirical budget calibrator.

A budget pairs a count/size bound M_t (step function of t, increasing,
>= 1) with oscillation thresholds delta_t(n) (increasing in t, decreasing
in n).  The five conditions on the projections Pi_t of a collection:

  A: at most M_t surviving projections;
  B: |gamma| and the age bounded by M_t on every truncation;
  C: oscillation of the canonically extended truncations at mesh 2^-n at
     most delta_t(n), for n up to the table depth;
  D: gamma jumps and age jumps of size >= 2^-n sit at least delta_t(n)
     apart in time;
  E: every surviving projection has a witness path with the identical
     truncation whose age passes through the open window
     (2^-2t, 2^-3t/2) while |gamma| <= M_t.

check_E is a within-sample search (the ambient-web existential cannot be
decided from a finite sample) and refuses to certify when the collection's
age-grid step exceeds the window width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .agedpath import canonical_extension, project
from .cadlag import oscillation, oscillation_at_most
from .collection import AGREE_TOL, PathCollection, maximal_truncations

_TGRID_JITTER = (math.sqrt(2.0) - 1.0) / 24.0

DEFAULT_T_GRID = tuple(t + _TGRID_JITTER for t in (1.0, 1.5, 2.0, 2.5, 3.0))


class CalibrationError(RuntimeError):
    def __init__(self, message, best_eps=None, report=None):
        super().__init__(message)
        self.best_eps = best_eps
        self.report = report


@dataclass(frozen=True)
class Budget:
    """M_t step function plus the delta_t(n) table on a t-knot grid."""

    t_knots: np.ndarray
    M_values: np.ndarray
    delta: np.ndarray  # shape (len(t_knots), n_max), index n-1

    def __post_init__(self):
        tk = np.asarray(self.t_knots, dtype=float)
        mv = np.asarray(self.M_values, dtype=float)
        dl = np.atleast_2d(np.asarray(self.delta, dtype=float))
        if len(tk) != len(mv) or dl.shape[0] != len(tk):
            raise ValueError("budget arrays misaligned")
        if np.any(np.diff(tk) <= 0):
            raise ValueError("t knots must increase")
        if np.any(mv < 1.0) or np.any(np.diff(mv) < -1e-12):
            raise ValueError("M must be >= 1 and increasing")
        if np.any(dl <= 0):
            raise ValueError("delta entries must be positive")
        if np.any(np.diff(dl, axis=0) < -1e-12):
            raise ValueError("delta must be increasing in t")
        if np.any(np.diff(dl, axis=1) > 1e-12):
            raise ValueError("delta must be decreasing in n")
        object.__setattr__(self, "t_knots", tk)
        object.__setattr__(self, "M_values", mv)
        object.__setattr__(self, "delta", dl)

    @property
    def n_max(self):
        return self.delta.shape[1]

    def _row(self, t):
        i = int(np.searchsorted(self.t_knots, t + 1e-12, side="right")) - 1
        return max(i, 0)

    def M(self, t):
        return float(self.M_values[self._row(t)])

    def delta_at(self, t, n):
        if not (1 <= n <= self.n_max):
            raise ValueError("n outside the budget table")
        return float(self.delta[self._row(t), n - 1])

    def to_dict(self):
        return {
            "t": self.t_knots.tolist(),
            "M": self.M_values.tolist(),
            "delta": self.delta.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["t"], dtype=float), np.asarray(d["M"], dtype=float),
                   np.asarray(d["delta"], dtype=float))


# ---------------------------------------------------------------------------
# shared projection pass
# ---------------------------------------------------------------------------


@dataclass
class _Projected:
    paths: list        # AgedPath with nonempty projection
    tps: list          # their truncations
    survivors: list    # maximal truncations
    groups: list       # per survivor, indices into paths/tps with equal truncation


def _project_all(G: PathCollection, t: float) -> _Projected:
    if not (1.0 <= t <= G.horizon + 1e-12):
        raise ValueError("need 1 <= t <= horizon")
    paths, tps = [], []
    for p in G.paths:
        tp = project(p, t)
        if tp is not None:
            paths.append(p)
            tps.append(tp)
    survivors, groups = maximal_truncations(tps, AGREE_TOL, return_groups=True)
    return _Projected(paths, tps, survivors, groups)


# ---------------------------------------------------------------------------
# condition checkers
# ---------------------------------------------------------------------------


def _trunc_bounds(tp):
    glo, ghi = tp.gamma_t.extrema()
    alo, ahi = tp.age_t.extrema()
    return max(abs(glo), abs(ghi)), ahi


def _check_A(pr: _Projected, B: Budget, t: float) -> bool:
    return len(pr.survivors) <= B.M(t)


def _check_B(pr: _Projected, B: Budget, t: float) -> bool:
    M = B.M(t)
    for tp in pr.survivors:
        gabs, amax = _trunc_bounds(tp)
        if gabs > M or amax > M:
            return False
    return True


def _check_C(pr: _Projected, B: Budget, t: float, n_max: int) -> bool:
    for tp in pr.survivors:
        gx, ax = canonical_extension(tp)
        for n in range(1, n_max + 1):
            d = B.delta_at(t, n)
            mesh = 2.0 ** (-n)
            if not oscillation_at_most(gx, mesh, d):
                return False
            if not oscillation_at_most(ax, mesh, d):
                return False
    return True


def _jump_separation(tp, size_min):
    """Min time distance between gamma jumps and age jumps of size >= size_min
    (age jumps counted upward); inf when either list is empty."""
    gj = [s for s, sz in tp.gamma_t.jumps(0.0) if abs(sz) >= size_min]
    aj = [s for s, sz in tp.age_t.jumps(0.0) if sz >= size_min]
    if not gj or not aj:
        return math.inf
    return min(abs(s - s2) for s in gj for s2 in aj)


def _check_D(pr: _Projected, B: Budget, t: float, n_max: int) -> bool:
    for tp in pr.survivors:
        for n in range(1, n_max + 1):
            if _jump_separation(tp, 2.0 ** (-n)) < B.delta_at(t, n):
                return False
    return True


def _age_window_intervals(p, lo, hi):
    """Closures of the time intervals where the age sits in the open window
    (lo, hi); intervals are nonempty open sets before closure."""
    a = p.age
    out = []
    ends = np.append(a.starts[1:], a.domain_hi)
    for u, v0, m, v in zip(a.starts, a.values, a.slopes, ends):
        if m > 0:
            s1 = u + (lo - v0) / m
            s2 = u + (hi - v0) / m
            s1, s2 = max(s1, u), min(s2, v)
            if s1 < s2:
                out.append((float(s1), float(s2)))
        elif lo < v0 < hi:
            out.append((float(u), float(v)))
    return out


def _min_abs_gamma_on(p, s1, s2):
    """Min of |gamma| over the open interval (s1, s2), exact per segment."""
    g = p.gamma
    pts = [s1] + [float(x) for x in g.starts if s1 < x < s2]
    best = math.inf
    ends = pts[1:] + [s2]
    for u, v in zip(pts, ends):
        val = g.eval(u)
        idx = max(int(np.searchsorted(g.starts, u, side="right")) - 1, 0)
        m = float(g.slopes[idx])
        vend = val + m * (v - u)
        if val * vend < 0:
            return 0.0  # sign change inside the piece
        best = min(best, abs(val), abs(vend))
    return best


def witness_M_requirement(G: PathCollection, t: float, pr: _Projected | None = None):
    """For each surviving projection, the smallest M such that some path with
    the identical truncation has its age inside (2^-2t, 2^-3t/2) while
    |gamma| <= M; returns the max over survivors (inf when some projection
    has no age-crossing witness, 0 when there are no survivors)."""
    lo, hi = 2.0 ** (-2.0 * t), 2.0 ** (-1.5 * t)
    if pr is None:
        pr = _project_all(G, t)
    worst = 0.0
    for group in pr.groups:
        best = math.inf
        for j in group:
            p = pr.paths[j]
            for s1, s2 in _age_window_intervals(p, lo, hi):
                best = min(best, _min_abs_gamma_on(p, s1, s2))
        worst = max(worst, best)
    return worst


def _check_E(pr: _Projected, B: Budget, t: float, grid_step: float) -> str:
    lo, hi = 2.0 ** (-2.0 * t), 2.0 ** (-1.5 * t)
    if grid_step > hi - lo:
        return "inconclusive"
    req = witness_M_requirement(None, t, pr)
    return "pass" if req <= B.M(t) else "fail"


def check_A(G: PathCollection, B: Budget, t: float) -> bool:
    """Condition A: |Pi_t(G)| <= M_t."""
    return _check_A(_project_all(G, t), B, t)


def check_B(G: PathCollection, B: Budget, t: float) -> bool:
    """Condition B: age <= M_t and |gamma| <= M_t on every truncation."""
    return _check_B(_project_all(G, t), B, t)


def check_C(G: PathCollection, B: Budget, t: float, n_max: int | None = None) -> bool:
    """Condition C: oscillation of the extended truncations within budget."""
    n_max = B.n_max if n_max is None else min(n_max, B.n_max)
    return _check_C(_project_all(G, t), B, t, n_max)


def check_D(G: PathCollection, B: Budget, t: float, n_max: int | None = None) -> bool:
    """Condition D: large gamma jumps and age jumps separated in time."""
    n_max = B.n_max if n_max is None else min(n_max, B.n_max)
    return _check_D(_project_all(G, t), B, t, n_max)


def check_E(G: PathCollection, B: Budget, t: float) -> str:
    """Condition E: 'pass', 'fail' or 'inconclusive' (data coarser than the
    age window)."""
    return _check_E(_project_all(G, t), B, t, G.grid_step)


def check_all(G: PathCollection, B: Budget, t: float, n_max: int | None = None):
    """Dict of all five condition outcomes at one t (single projection pass)."""
    n_max = B.n_max if n_max is None else min(n_max, B.n_max)
    pr = _project_all(G, t)
    return {
        "A": _check_A(pr, B, t),
        "B": _check_B(pr, B, t),
        "C": _check_C(pr, B, t, n_max),
        "D": _check_D(pr, B, t, n_max),
        "E": _check_E(pr, B, t, G.grid_step),
    }


def sample_passes(G: PathCollection, B: Budget, t_grid, n_max: int | None = None) -> bool:
    """All of A-D true and E never 'fail' across the grid."""
    for t in t_grid:
        out = check_all(G, B, t, n_max)
        if not (out["A"] and out["B"] and out["C"] and out["D"]) or out["E"] == "fail":
            return False
    return True


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


@dataclass
class CalibrationReport:
    t_grid: list
    fail_rates: dict            # (t, condition) -> fraction of samples failing
    pass_rate: float
    quantile_level: float
    unwitnessed: int            # samples with a projection no path can witness


def _osc_requirement(tp, n_max, rtol):
    gx, ax = canonical_extension(tp)
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        mesh = 2.0 ** (-n)
        out[n - 1] = max(oscillation(gx, mesh, rtol=rtol),
                         oscillation(ax, mesh, rtol=rtol))
    return out


def calibrate(samples, eps: float, t_grid=None, n_max: int = 4,
              osc_rtol: float = 1e-4, max_rounds: int = 6):
    """Smallest per-t budget (empirical quantiles per condition at level
    1 - eps/5, mirroring the proof's eps/5 split) such that at least a
    1 - eps fraction of the samples passes every check on t_grid.

    Returns (Budget, CalibrationReport).  Raises CalibrationError carrying
    the best achievable rate when the target cannot be met.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    if not (0.0 < eps < 1.0):
        raise ValueError("need 0 < eps < 1")
    t_grid = list(DEFAULT_T_GRID if t_grid is None else t_grid)
    nt, ns = len(t_grid), len(samples)

    m_req = np.zeros((ns, nt))
    c_req = np.zeros((ns, nt, n_max))
    projected = [[None] * nt for _ in range(ns)]
    unwitnessed = 0
    for si, G in enumerate(samples):
        bad_witness = False
        for ti, t in enumerate(t_grid):
            pr = _project_all(G, t)
            projected[si][ti] = pr
            mb = 0.0
            for tp in pr.survivors:
                gabs, amax = _trunc_bounds(tp)
                mb = max(mb, gabs, amax)
                c_req[si, ti] = np.maximum(c_req[si, ti],
                                           _osc_requirement(tp, n_max, osc_rtol))
            me = witness_M_requirement(G, t, pr)
            if math.isinf(me):
                bad_witness = True
                me = 0.0
            m_req[si, ti] = max(float(len(pr.survivors)), mb, me)
        if bad_witness:
            unwitnessed += 1

    def build(level):
        M = np.quantile(m_req, level, axis=0, method="higher")
        M = np.maximum.accumulate(np.maximum(M, 1.0))
        # the budget is the smallest satisfying C; samples whose large jumps
        # sit closer than that fail D and are counted against the pass rate
        # (for walk data D only binds when lattice jumps reach 2^-n)
        delta = np.quantile(c_req, level, axis=0, method="higher")
        delta = delta * (1.0 + 10.0 * osc_rtol) + 1e-12
        delta = np.maximum.accumulate(delta, axis=0)     # increasing in t
        for n in range(n_max - 2, -1, -1):               # decreasing in n
            delta[:, n] = np.maximum(delta[:, n], delta[:, n + 1])
        return Budget(np.asarray(t_grid), M, delta)

    level = 1.0 - eps / 5.0
    best = None
    for _ in range(max_rounds):
        budget = build(level)
        fails = {(t, c): 0 for t in t_grid for c in "ABCDE"}
        npass = 0
        for si, G in enumerate(samples):
            ok = True
            for ti, t in enumerate(t_grid):
                pr = projected[si][ti]
                out = {
                    "A": _check_A(pr, budget, t),
                    "B": _check_B(pr, budget, t),
                    "C": _check_C(pr, budget, t, n_max),
                    "D": _check_D(pr, budget, t, n_max),
                    "E": _check_E(pr, budget, t, G.grid_step),
                }
                for c in "ABCD":
                    if not out[c]:
                        fails[(t, c)] += 1
                        ok = False
                if out["E"] == "fail":
                    fails[(t, "E")] += 1
                    ok = False
            npass += ok
        rate = npass / ns
        report = CalibrationReport(
            t_grid,
            {k: v / ns for k, v in fails.items()},
            rate,
            level,
            unwitnessed,
        )
        if best is None or rate > best[1].pass_rate:
            best = (budget, report)
        if rate >= 1.0 - eps:
            return budget, report
        level = 1.0 - (1.0 - level) / 2.0
    raise CalibrationError(
        f"cannot reach pass rate {1 - eps:.4g}; best achievable "
        f"{best[1].pass_rate:.4g}",
        best_eps=1.0 - best[1].pass_rate,
        report=best[1],
    )
