"""Monte-Carlo probes of the quantitative coalescing-walk lemmas, plus the
tightness scan.

Every experiment is a pure function of its parameters and seed list:
rerunning reproduces the report bitwise.  Standard errors come from
seed-level batching (at least 20 batches when the seed list allows), and
scaling-law fits are least squares on log-transformed batch means with a
batch-bootstrap confidence interval.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .collection import PathCollection, project_collection
from .compactness import DEFAULT_T_GRID, calibrate, sample_passes
from .walkers import build_kernel, renormalize, simulate


class ExperimentError(RuntimeError):
    """Raised when an experiment's preconditions fail at runtime."""


@dataclass
class ExperimentReport:
    name: str
    params: dict
    samples: int
    estimates: dict                  # key -> (value, stderr)
    fit: tuple | None = None         # (slope, intercept, r_squared)
    seeds: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "params": self.params,
            "samples": self.samples,
            "estimates": {k: [float(v), float(se)] for k, (v, se) in self.estimates.items()},
            "fit": list(self.fit) if self.fit is not None else None,
            "seeds": list(self.seeds),
            "extra": self.extra,
        }

    def csv_rows(self):
        """Long-format rows (param, metric, value, stderr)."""
        rows = []
        for key in self.estimates:
            v, se = self.estimates[key]
            param, _, metric = key.partition("/")
            rows.append((param, metric or "value", v, se))
        if self.fit is not None:
            slope, intercept, r2 = self.fit
            se = self.extra.get("slope_stderr", "")
            rows.append(("fit", "slope", slope, se))
            rows.append(("fit", "intercept", intercept, ""))
            rows.append(("fit", "r_squared", r2, ""))
        return rows


def n_threads():
    try:
        return max(1, int(os.environ.get("STABLEWEB_THREADS", "1")))
    except ValueError:
        return 1


def _seed_map(fn, seeds):
    """Map fn over seeds, optionally threaded; results ordered by position."""
    seeds = list(seeds)
    workers = n_threads()
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, seeds))


def _batches(n_items, min_batches=20):
    """Contiguous index batches, at least min_batches when possible."""
    nb = min(n_items, max(min_batches, 1))
    edges = np.linspace(0, n_items, nb + 1).astype(int)
    return [np.arange(edges[i], edges[i + 1]) for i in range(nb) if edges[i + 1] > edges[i]]


def _batch_estimate(values):
    """(mean, stderr) via seed-level batching of a per-seed value array."""
    values = np.asarray(values, dtype=float)
    bs = _batches(len(values))
    means = np.array([values[b].mean() for b in bs])
    se = means.std(ddof=1) / math.sqrt(len(means)) if len(means) > 1 else 0.0
    return float(values.mean()), float(se)


def _fit_line(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), r2


def _bootstrap_slope(x, batch_means, n_boot=200, seed=20170825):
    """Slope stderr and 95% CI by resampling seed batches.

    batch_means: (n_batches, n_points) of per-batch estimates; rows are
    resampled with replacement, log-transformed means are refit per draw.
    """
    rng = np.random.default_rng(seed)
    nb = batch_means.shape[0]
    slopes = []
    for _ in range(n_boot):
        pick = rng.integers(0, nb, size=nb)
        m = batch_means[pick].mean(axis=0)
        if np.any(m <= 0):
            continue
        s, _, _ = _fit_line(x, np.log(m))
        slopes.append(s)
    if len(slopes) < 10:
        return float("nan"), (float("nan"), float("nan"))
    slopes = np.sort(slopes)
    se = float(np.std(slopes, ddof=1))
    lo = float(slopes[int(0.025 * len(slopes))])
    hi = float(slopes[min(int(0.975 * len(slopes)), len(slopes) - 1)])
    return se, (lo, hi)


# ---------------------------------------------------------------------------
# density decay: exponent -1/alpha
# ---------------------------------------------------------------------------


def density_scan(alpha, L, times, seeds, radius=None, fit_from=None):
    """Cluster density of time-0-born coalescing walks in the unfrozen core.

    L counts total lattice sites; density at walk time t is the number of
    distinct clusters per core site.  Fits log density against log time
    (expected slope -1/alpha).
    """
    times = [int(t) for t in times]
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("times must increase")
    seeds = list(seeds)
    if radius is None:
        radius = 1 if alpha == 2.0 else 2000
    kernel = build_kernel(alpha, radius)
    T = max(times)
    span_hw = (int(L) - 1) // 2
    margin = int(math.ceil(6.0 * T ** (1.0 / alpha))) + 2 * kernel.radius
    core_hw = span_hw - margin
    if core_hw <= 0:
        raise ExperimentError("core window empty after the freeze margin")
    core_sites = 2 * core_hw + 1

    def one(seed):
        rng = np.random.default_rng(seed)
        counts = _backend.walk_time0(kernel.cdf, kernel.offsets, span_hw,
                                     core_hw, T, times, rng)
        return np.asarray(counts, dtype=float) / core_sites

    dens = np.array(_seed_map(one, seeds))  # (n_seeds, n_times)
    estimates = {}
    for j, t in enumerate(times):
        estimates[f"{t}/density"] = _batch_estimate(dens[:, j])
    fit_times = [t for t in times if t >= (fit_from if fit_from is not None else 1)]
    idx = [times.index(t) for t in fit_times if t > 0]
    x = np.log([times[i] for i in idx])
    y = np.log(dens[:, idx].mean(axis=0))
    slope, intercept, r2 = _fit_line(x, y)
    bs = _batches(len(seeds))
    bm = np.array([dens[b][:, idx].mean(axis=0) for b in bs])
    se, ci = _bootstrap_slope(x, bm)
    return ExperimentReport(
        "density_scan",
        {"alpha": alpha, "L": L, "times": times, "radius": kernel.radius,
         "core_sites": core_sites},
        len(seeds),
        estimates,
        (slope, intercept, r2),
        seeds,
        {"slope_stderr": se, "slope_ci": ci, "expected_slope": -1.0 / alpha},
    )


# ---------------------------------------------------------------------------
# interval coalescence: P(count >= m) decays exponentially in m
# ---------------------------------------------------------------------------


def interval_coalescence(m_values, interval_len, c_trial, seeds,
                         sites_per_unit=256):
    """Killed coalescing walks on [0, interval_len] from full occupancy;
    estimates P(count >= m at continuum time interval_len^2 / (c_trial m^2))
    and fits log P against m."""
    m_values = sorted(int(m) for m in m_values)
    if m_values[0] < 2:
        raise ValueError("need m >= 2")
    seeds = list(seeds)
    S = int(round(sites_per_unit * interval_len))
    if S < 4 * m_values[-1]:
        raise ExperimentError("lattice too coarse for the largest m")
    # lazy walk: sigma^2 = 1/2 per step, spacing interval_len/S
    def steps_for(m):
        tau = interval_len ** 2 / (c_trial * m * m)
        return max(int(round(2.0 * tau * (S / interval_len) ** 2)), 1)

    snaps = [steps_for(m) for m in m_values]

    def one(seed):
        rng = np.random.default_rng(seed)
        counts = _backend.walk_time0(np.asarray([0.25, 0.75, 1.0]),
                                     np.asarray([-1, 0, 1], dtype=np.int64),
                                     0, 0, max(snaps), snaps, rng, absorb_at=S)
        return np.asarray(counts)

    counts = np.array(_seed_map(one, seeds))  # (n_seeds, n_m)
    indic = counts >= np.asarray(m_values)[None, :]
    estimates = {}
    for j, m in enumerate(m_values):
        estimates[f"{m}/prob_count_ge_m"] = _batch_estimate(indic[:, j].astype(float))
    successes = indic.sum(axis=0)
    keep = [j for j in range(len(m_values)) if successes[j] >= 10]
    fit = None
    extra = {"successes": successes.tolist(), "snap_steps": snaps,
             "sites": S, "dropped_m": [m_values[j] for j in range(len(m_values))
                                       if j not in keep]}
    if len(keep) >= 2:
        x = np.asarray([m_values[j] for j in keep], dtype=float)
        y = np.log(indic[:, keep].mean(axis=0))
        fit = _fit_line(x, y)
        bs = _batches(len(seeds))
        bm = np.array([indic[b][:, keep].mean(axis=0) for b in bs])
        se, ci = _bootstrap_slope(x, bm)
        extra["slope_stderr"] = se
        extra["slope_ci"] = ci
    return ExperimentReport(
        "interval_coalescence",
        {"m_values": m_values, "interval_len": interval_len, "c_trial": c_trial,
         "sites_per_unit": sites_per_unit},
        len(seeds), estimates, fit, seeds, extra,
    )


# ---------------------------------------------------------------------------
# insulation: P(no cell shields) decays exponentially in the cell count
# ---------------------------------------------------------------------------

_LAZY_CDF = np.asarray([0.25, 0.75, 1.0])
_LAZY_OFF = np.asarray([-1, 0, 1], dtype=np.int64)


def insulation_probe(N_values, seeds, m_sites=71, burn_time=0.25):
    """A_N: no unit cell k in {2..N} holds a path that stays strictly inside
    over [time 0, time 1] with age above 1 at time 0.

    Full occupancy starts at time -(1 + burn_time) so that every cluster's
    age exceeds 1 on the window; no later births (young paths cannot shield
    and do not perturb older trajectories in a coalescing system).  The
    single-cell shield probability c_hat is estimated from standalone
    killed-at-boundary cells, giving the independence bound
    P(A_N) <= (1 - c_hat)^(N-1).
    """
    N_values = sorted(int(N) for N in N_values)
    if N_values[0] < 2:
        raise ValueError("need N >= 2")
    seeds = list(seeds)
    n_units = N_values[-1]
    unit_steps = 2 * m_sites * m_sites           # one continuum time unit
    burn_steps = int(round((1.0 + burn_time) * unit_steps))

    def one(batch):
        rng = np.random.default_rng(np.random.SeedSequence(list(batch)))
        ins = _backend.walk_insulation(_LAZY_CDF, _LAZY_OFF, n_units, m_sites, 1,
                                       burn_steps, unit_steps, len(batch), rng)
        # A_N: none of the cells c = 1..N-1 (i.e. k = 2..N) insulated
        return np.stack([~ins[:, 1:N].any(axis=1) for N in N_values], axis=1)

    batches = [[seeds[i] for i in b] for b in _batches(len(seeds))]
    rows = np.concatenate(_seed_map(one, batches), axis=0)
    estimates = {}
    for j, N in enumerate(N_values):
        estimates[f"{N}/prob_A_N"] = _batch_estimate(rows[:, j].astype(float))

    def one_cell(batch):
        rng = np.random.default_rng(np.random.SeedSequence(list(batch)))
        ins = _backend.walk_insulation(_LAZY_CDF, _LAZY_OFF, 1, m_sites, 0,
                                       burn_steps, unit_steps, len(batch), rng,
                                       absorb=True)
        return ins[:, 0]

    cell_batches = [[s + 987_654_321 for s in b] for b in batches]
    shield = np.concatenate(_seed_map(one_cell, cell_batches), axis=0)
    c_hat, c_se = _batch_estimate(shield.astype(float))
    estimates["single_cell/c_hat"] = (c_hat, c_se)

    x = np.asarray(N_values, dtype=float)
    y = np.log(np.maximum(rows.mean(axis=0), 1e-12))
    fit = _fit_line(x, y)
    bs = _batches(len(seeds))
    bm = np.array([rows[b].mean(axis=0) for b in bs])
    se, ci = _bootstrap_slope(x, bm)
    bound = [(1.0 - c_hat) ** (N - 1) for N in N_values]
    return ExperimentReport(
        "insulation_probe",
        {"N_values": N_values, "m_sites": m_sites, "burn_time": burn_time,
         "steps_per_unit": unit_steps},
        len(seeds), estimates, fit, seeds,
        {"slope_stderr": se, "slope_ci": ci,
         "independent_bound": bound},
    )


# ---------------------------------------------------------------------------
# four-path avoidance exponent
# ---------------------------------------------------------------------------


def avoidance_exponent(delta_values, seeds, runs_schedule=None, gap_sites=12,
                       time_horizon=1.0):
    """Four walkers started equally spaced across a width-delta interval;
    estimates the probability that no ordered-neighbour pair meets before
    the time horizon and fits the exponent of P ~ delta^c.

    The same runs also yield the two-path survival (pair (1,2) alone,
    exponent about 1) and the outer-pair event ((1,2) and (3,4) both
    survive, exponent about 2) for comparison in the same harness.
    """
    delta_values = sorted(float(d) for d in delta_values, )
    delta_values = delta_values[::-1]  # big to small
    if delta_values[0] > 0.25 or delta_values[-1] <= 0:
        raise ValueError("need deltas in (0, 1/4]")
    seeds = list(seeds)
    if runs_schedule is None:
        runs_schedule = [max(1, int(round(8 * (delta_values[0] / d) ** 2.5)))
                         for d in delta_values]
    if len(runs_schedule) != len(delta_values):
        raise ValueError("runs_schedule must align with delta_values")
    g = gap_sites
    per_seed = {}
    for d, runs in zip(delta_values, runs_schedule):
        h = d / (3.0 * g)
        steps = max(int(round(2.0 * time_horizon / (h * h))), 1)

        def one(seed, steps=steps, runs=runs):
            rng = np.random.default_rng(seed)
            full, outer, p12 = _backend.walk_avoidance(
                _LAZY_CDF, _LAZY_OFF, g, steps, runs, rng)
            return full, outer, p12

        per_seed[d] = (np.array(_seed_map(one, seeds), dtype=float), runs)

    estimates = {}
    rates = {"full": [], "outer": [], "pair12": []}
    batch_rates = {"full": [], "outer": [], "pair12": []}
    successes = []
    bs = _batches(len(seeds))
    for d in delta_values:
        counts, runs = per_seed[d]
        for j, key in enumerate(("full", "outer", "pair12")):
            vals = counts[:, j] / runs
            estimates[f"{d:g}/prob_{key}"] = _batch_estimate(vals)
            rates[key].append(vals.mean())
            batch_rates[key].append([counts[b][:, j].sum() / (len(b) * runs) for b in bs])
        successes.append(int(counts[:, 0].sum()))

    x_all = np.log(np.asarray(delta_values))
    keep = [i for i, s in enumerate(successes) if s >= 10]
    flagged = [delta_values[i] for i in range(len(delta_values)) if i not in keep]
    extra = {"successes_full": successes, "dropped_deltas": flagged,
             "runs_schedule": list(runs_schedule), "gap_sites": g}
    fit = None
    for key in ("full", "outer", "pair12"):
        idx = keep if key == "full" else list(range(len(delta_values)))
        if len(idx) < 2:
            continue
        x = x_all[idx]
        y = np.log(np.maximum(np.asarray(rates[key])[idx], 1e-300))
        f = _fit_line(x, y)
        bm = np.asarray(batch_rates[key]).T[:, idx]
        se, ci = _bootstrap_slope(x, bm)
        extra[f"exponent_{key}"] = f[0]
        extra[f"exponent_{key}_ci"] = ci
        if key == "full":
            fit = f
            extra["slope_stderr"] = se
    return ExperimentReport(
        "avoidance_exponent",
        {"delta_values": delta_values, "gap_sites": g, "time_horizon": time_horizon},
        len(seeds), estimates, fit, seeds, extra,
    )


# ---------------------------------------------------------------------------
# birth modulus (early displacement of brownian-case paths)
# ---------------------------------------------------------------------------


def displacement_threshold(n0):
    """Sum_{n >= n0} n 2^{-n/2} in closed form."""
    x = 2.0 ** (-0.5)
    return x ** n0 * (n0 - (n0 - 1) * x) / (1.0 - x) ** 2


def _enters_box(p, box_space, box_time, box_age):
    """Does (gamma(s), s, a(s)) enter box_space x box_time x box_age?"""
    from .agedpath import _joint_breaks

    lo = max(box_time[0], p.domain_lo)
    hi = min(box_time[1], p.horizon)
    if lo >= hi:
        return False
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
    for coef, bound in (
        (gm, box_space[1] - gv),
        (-gm, gv - box_space[0]),
        (am, box_age[1] - av),
        (-am, av - box_age[0]),
    ):
        pos = coef > 0
        neg = coef < 0
        zer = ~pos & ~neg
        with np.errstate(divide="ignore", invalid="ignore"):
            crossing = u + bound / coef
        shi[pos] = np.minimum(shi[pos], crossing[pos])
        slo[neg] = np.maximum(slo[neg], crossing[neg])
        shi[zer & (bound < 0.0)] = -np.inf
    return bool(np.any(slo <= shi))


def birth_modulus(n0_values, seeds, N=200, collection_source=None,
                  box=((0.5, 1.0), (0.5, 1.0), (0.5, 1.0))):
    """Early-displacement probe for brownian-case paths entering the
    reference spacetime-age box.

    For sampled alpha=2 collections, paths meeting the box are tested for
    sup |gamma(s) - gamma(s')| before the age first reaches 2^-n0 exceeding
    sum_{n >= n0} n 2^{-n/2}; also verifies the age-crossing increments
    lambda(2^{-n+1}) - lambda(2^{-n}) <= 2^{-n}.
    """
    from .agedpath import first_age_time
    from .cadlag import restrict

    n0_values = sorted(int(n) for n in n0_values)
    seeds = list(seeds)
    if collection_source is None:
        shift = 1.3
        T = int(4 * N)

        def collection_source(seed):
            k = build_kernel(2.0)
            ws = simulate(k, L=int(4 * math.sqrt(N)) + 2, T=T, buffer=2,
                          seed=seed)
            return renormalize(ws, N=N, origin_shift=shift,
                               eval_times=[1.0 + 1e-3])

    def one(seed):
        G = collection_source(seed)
        exceed = np.zeros(len(n0_values))
        qualifying = 0
        lam_bad = 0
        for p in G.paths:
            if not _enters_box(p, *box):
                continue
            qualifying += 1
            lams = {}
            for n in range(min(n0_values), max(n0_values) + 2):
                lams[n] = first_age_time(p, 2.0 ** (-n))
            for n in range(min(n0_values), max(n0_values) + 1):
                l1, l2 = lams.get(n + 1), lams.get(n)
                if l1 is not None and l2 is not None and l2 - l1 > 2.0 ** (-n) + 1e-9:
                    lam_bad += 1
            for j, n0 in enumerate(n0_values):
                lam = lams.get(n0)
                if lam is None or lam <= p.domain_lo:
                    continue
                seg = restrict(p.gamma, p.domain_lo, lam)
                lo, hi = seg.extrema()
                if hi - lo > displacement_threshold(n0):
                    exceed[j] += 1
        return exceed, qualifying, lam_bad

    out = _seed_map(one, seeds)
    qual = np.array([q for _, q, _ in out])
    if qual.sum() == 0:
        raise ExperimentError("no qualifying paths in any sample")
    exceed = np.array([e for e, _, _ in out])
    lam_bad = sum(lb for _, _, lb in out)
    estimates = {}
    for j, n0 in enumerate(n0_values):
        per_seed = exceed[:, j] / np.maximum(qual, 1)
        estimates[f"{n0}/prob_exceed"] = _batch_estimate(per_seed)
        estimates[f"{n0}/threshold"] = (displacement_threshold(n0), 0.0)
    estimates["paths/qualifying_mean"] = _batch_estimate(qual.astype(float))
    return ExperimentReport(
        "birth_modulus",
        {"n0_values": n0_values, "N": N, "box": [list(b) for b in box]},
        len(seeds), estimates, None, seeds,
        {"lambda_increment_violations": int(lam_bad)},
    )


# ---------------------------------------------------------------------------
# tightness scan
# ---------------------------------------------------------------------------


def ks_distance(a, b):
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        return 1.0
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def walk_collection(alpha, N, seed, t_grid, radius_scale=4.0, label=""):
    """One renormalized coalescing-walk collection covering the given
    evaluation times."""
    t_max = max(t_grid)
    shift = t_max + 0.25
    T = int(N * math.ceil(shift + t_max + 0.5))
    scale = N ** (1.0 / alpha)
    if alpha == 2.0:
        radius = 1
    else:
        radius = max(int(math.ceil(radius_scale * scale)), 1)
    L = int(math.ceil((t_max + 3.0) * scale))
    k = build_kernel(alpha, radius)
    ws = simulate(k, L=L, T=T, buffer=max(k.radius, 2), seed=seed)
    return renormalize(ws, N=N, origin_shift=shift, eval_times=t_grid,
                       label=label or f"alpha{alpha}-N{N}-seed{seed}")


def tightness_scan(alpha, N_values, eps, seeds, samples_per_N=None,
                   t_grid=None, n_max=3, t_ref=None):
    """Calibrate a budget at the smallest N and measure its pass rate at
    every larger N on fresh seeds; also reports Kolmogorov-Smirnov
    distances between consecutive N of projection summaries (counts,
    window-entry times, endpoint values) as convergence evidence."""
    N_values = sorted(int(N) for N in N_values)
    if len(N_values) < 1:
        raise ValueError("need at least one N")
    seeds = list(seeds)
    t_grid = list(DEFAULT_T_GRID if t_grid is None else t_grid)
    t_ref = (2.0 + (t_grid[0] - int(t_grid[0]))) if t_ref is None else t_ref
    if samples_per_N is None:
        samples_per_N = len(seeds)
    eval_times = sorted(set(t_grid) | {t_ref})

    def gen(N, offset, count):
        def one(i):
            return walk_collection(alpha, N, seeds[i % len(seeds)] + offset, eval_times)
        return _seed_map(one, range(count))

    base = gen(N_values[0], 0, samples_per_N)
    budget, cal_report = calibrate(base, eps, t_grid=t_grid, n_max=n_max)

    estimates = {}
    summaries = {}
    pass_rates = {}
    for j, N in enumerate(N_values):
        colls = base if j == 0 else gen(N, 1_000_000 * (j + 1), samples_per_N)
        passes = np.array([float(sample_passes(G, budget, t_grid, n_max))
                           for G in colls])
        estimates[f"N{N}/pass_rate"] = _batch_estimate(passes)
        pass_rates[N] = float(passes.mean())
        counts, bvals, endvals = [], [], []
        for G in colls:
            tps = project_collection(G, t_ref)
            counts.append(len(tps))
            bvals.extend(tp.b for tp in tps)
            endvals.extend(tp.gamma_t.eval(tp.t) for tp in tps)
        summaries[N] = (np.asarray(counts, dtype=float), np.asarray(bvals),
                        np.asarray(endvals))
        estimates[f"N{N}/proj_count"] = _batch_estimate(np.asarray(counts, dtype=float))

    ks_rows = {}
    for N1, N2 in zip(N_values, N_values[1:]):
        for name, idx in (("count", 0), ("entry_time", 1), ("endpoint", 2)):
            d = ks_distance(summaries[N1][idx], summaries[N2][idx])
            estimates[f"N{N1}-N{N2}/ks_{name}"] = (d, _ks_stderr(
                summaries[N1][idx], summaries[N2][idx]))
            ks_rows[(N1, N2, name)] = d
    return ExperimentReport(
        "tightness_scan",
        {"alpha": alpha, "N_values": N_values, "eps": eps,
         "samples_per_N": samples_per_N, "t_grid": t_grid, "n_max": n_max,
         "t_ref": t_ref},
        samples_per_N * len(N_values), estimates, None, seeds,
        {"budget": budget.to_dict(),
         "calibration_pass_rate": cal_report.pass_rate,
         "calibration_fail_rates": {f"{t:g}/{c}": v for (t, c), v in
                                    cal_report.fail_rates.items() if v > 0},
         "pass_rates": {str(k): v for k, v in pass_rates.items()},
         "ks": {f"{a}-{b}/{nm}": v for (a, b, nm), v in ks_rows.items()}},
    )


def _ks_stderr(a, b, n_boot=100, seed=321):
    rng = np.random.default_rng(seed)
    vals = []
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        return 0.0
    for _ in range(n_boot):
        vals.append(ks_distance(a[rng.integers(0, len(a), len(a))],
                                b[rng.integers(0, len(b), len(b))]))
    return float(np.std(vals, ddof=1))
