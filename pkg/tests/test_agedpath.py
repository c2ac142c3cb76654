import numpy as np
import pytest

from stableweb.agedpath import (
    AgedPath,
    birth_window,
    canonical_extension,
    first_age_time,
    project,
    project_h,
    validate,
)
from stableweb.cadlag import PiecewisePath


def simple_path(sigma=0.0, gamma_value=0.0, horizon=2.0):
    """sigma-born path with constant gamma and age(s) = s - sigma."""
    g = PiecewisePath.constant(sigma, horizon, gamma_value)
    a = PiecewisePath.linear(sigma, horizon, 0.0, 1.0)
    return AgedPath(sigma, g, a)


def random_valid_path(rng, horizon=4.0):
    """Random aged path with disjoint gamma/age jump grids and upward age jumps."""
    sigma = float(rng.uniform(-1.0, 0.5))
    gt = np.sort(rng.uniform(sigma + 0.05, horizon - 0.05, size=int(rng.integers(1, 5))))
    gt = gt[np.append(True, np.diff(gt) > 1e-3)]
    g = PiecewisePath.step(sigma, horizon, gt, rng.uniform(-0.6, 0.6, size=len(gt)),
                           value_at_lo=float(rng.uniform(-0.5, 0.5)))
    at = np.sort(rng.uniform(sigma + 0.07, horizon - 0.03, size=int(rng.integers(0, 4))))
    at = np.array([s for s in at if np.min(np.abs(gt - s)) > 1e-3])
    segs = [(sigma, 0.0, 1.0)]
    for s in at:
        prev_s, prev_v, _ = segs[-1]
        left_limit = prev_v + (s - prev_s)
        segs.append((float(s), left_limit + float(rng.uniform(0.05, 0.8)), 1.0))
    a = PiecewisePath.from_segments(sigma, horizon, segs)
    return AgedPath(sigma, g, a)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def test_validate_accepts_simple_path():
    assert validate(simple_path()) == []


def test_validate_flags_downward_age_jump():
    a = PiecewisePath.from_segments(0, 2, [(0, 0.0, 1.0), (1.0, 0.2, 1.0)])
    p = AgedPath(0.0, PiecewisePath.constant(0, 2, 0.0), a)
    out = validate(p)
    assert any(v.clause == "unit-growth" and v.time == pytest.approx(1.0) for v in out)


def test_validate_flags_sub_unit_slope():
    a = PiecewisePath.linear(0, 2, 0.0, 0.5)
    p = AgedPath(0.0, PiecewisePath.constant(0, 2, 0.0), a)
    assert any(v.clause == "unit-growth" for v in validate(p))


def test_validate_flags_simultaneous_jumps():
    g = PiecewisePath.step(0, 2, [0.5], [1.0])
    a = PiecewisePath.from_segments(0, 2, [(0, 0.0, 1.0), (0.5, 2.0, 1.0)])
    p = AgedPath(0.0, g, a)
    out = validate(p)
    assert any(v.clause == "simultaneous-jumps" and v.time == pytest.approx(0.5) for v in out)


def test_validate_flags_nonzero_birth_age():
    a = PiecewisePath.linear(0, 2, 0.7, 1.0)
    p = AgedPath(0.0, PiecewisePath.constant(0, 2, 0.0), a)
    assert any(v.clause == "birth-age" for v in validate(p))


# ---------------------------------------------------------------------------
# birth_window
# ---------------------------------------------------------------------------


def test_birth_window_age_threshold():
    assert birth_window(simple_path(), 1.0) == pytest.approx(0.5)


def test_birth_window_gamma_never_in_box():
    assert birth_window(simple_path(gamma_value=5.0), 1.0) is None


def test_birth_window_age_jump():
    g = PiecewisePath.constant(0, 2, 0.0)
    a = PiecewisePath.from_segments(0, 2, [(0, 0.2, 1.0), (0.1, 3.0, 1.0)])
    p = AgedPath(0.0, g, a)
    assert birth_window(p, 1.0) == pytest.approx(0.1)


def test_birth_window_tie_is_inclusive():
    # age hits the threshold exactly at a segment start
    g = PiecewisePath.constant(0, 2, 0.0)
    a = PiecewisePath.from_segments(0, 2, [(0, 0.0, 1.0), (0.5, 0.5, 1.0)])
    p = AgedPath(0.0, g, a)
    assert birth_window(p, 1.0) == pytest.approx(0.5)


def test_birth_window_requires_t_at_least_one():
    with pytest.raises(ValueError):
        birth_window(simple_path(), 0.5)


def test_birth_window_gamma_entry_time():
    # gamma enters the box [-1, 1] only at s = 0.75 (step down from 5)
    g = PiecewisePath.step(0, 2, [0.75], [-5.0], value_at_lo=5.0)
    a = PiecewisePath.linear(0, 2, 0.0, 1.0)
    p = AgedPath(0.0, g, a)
    assert birth_window(p, 1.0) == pytest.approx(0.75)


# ---------------------------------------------------------------------------
# project / project_h
# ---------------------------------------------------------------------------


def test_project_simple():
    tp = project(simple_path(), 1.0)
    assert tp.b == pytest.approx(0.5)
    assert tp.t == 1.0
    assert tp.gamma_t.eval(0.7) == 0.0
    assert tp.age_t.eval(0.7) == pytest.approx(0.7)


def test_project_empty():
    assert project(simple_path(gamma_value=5.0), 1.0) is None


def test_project_age_at_b_meets_threshold():
    tp = project(simple_path(horizon=3.0), 2.0)
    assert tp.age_t.eval(tp.b) >= 2.0 ** (-2.0) - 1e-12


def test_project_h_default_threshold_matches_project():
    p = simple_path()
    tp = project(p, 1.0)
    tph = project_h(p, 1.0, 2.0 ** (-1.0))
    assert tph.equals(tp)


def test_project_h_custom_threshold():
    tp = project_h(simple_path(), 1.0, 0.25)
    assert tp.b == pytest.approx(0.25)


def test_project_h_threshold_above_max_age():
    assert project_h(simple_path(), 1.0, 10.0) is None


def test_project_h_bad_threshold():
    with pytest.raises(ValueError):
        project_h(simple_path(), 1.0, 0.0)


def test_project_monotone_in_t():
    rng = np.random.default_rng(31)
    for _ in range(30):
        p = random_valid_path(rng)
        t1, t2 = 1.0, float(rng.uniform(1.1, 3.5))
        tp1 = project(p, t1)
        if tp1 is None:
            continue
        tp2 = project(p, t2)
        assert tp2 is not None
        assert tp2.b <= tp1.b + 1e-9


def test_project_consistency_when_b_stable():
    # construct paths whose b_t is pinned by the gamma box-entry time, so it
    # does not move with the age threshold 2^{-t}
    from stableweb.cadlag import restrict

    rng = np.random.default_rng(33)
    for _ in range(20):
        s0 = float(rng.uniform(0.3, 0.8))
        g = PiecewisePath.step(-0.5, 4.0, [s0], [-5.0], value_at_lo=5.0)
        a = PiecewisePath.linear(-0.5, 4.0, 0.0, 1.0)
        p = AgedPath(-0.5, g, a)
        t1 = float(rng.uniform(1.0, 2.0))
        t2 = float(rng.uniform(t1 + 0.3, 3.5))
        tp1, tp2 = project(p, t1), project(p, t2)
        assert tp1.b == pytest.approx(s0) and tp2.b == pytest.approx(s0)
        assert restrict(tp2.gamma_t, tp1.b, t1).equals(tp1.gamma_t)
        assert restrict(tp2.age_t, tp1.b, t1).equals(tp1.age_t)


# ---------------------------------------------------------------------------
# canonical extension
# ---------------------------------------------------------------------------


def test_canonical_extension_constant_gamma():
    tp = project(simple_path(), 1.0)
    g, a = canonical_extension(tp)
    assert (g.domain_lo, g.domain_hi) == (-2.0, 2.0)
    assert g.eval(-2.0) == 0.0 and g.eval(2.0) == 0.0


def test_canonical_extension_age_slope_one():
    tp = project(simple_path(), 1.0)
    _, a = canonical_extension(tp)
    assert a.eval(-2.0) == pytest.approx(-2.0)  # 0.5 + (-2 - 0.5)
    assert a.eval(2.0) == pytest.approx(2.0)
    assert np.all(a.slopes == 1.0)


def test_canonical_extension_oscillation_matches_interior():
    # isolated interior jump pair drives the modulus on both domains
    sigma = 0.0
    g = PiecewisePath.step(sigma, 2, [0.9, 0.93], [0.5, 0.5])
    a = PiecewisePath.linear(sigma, 2, 0.0, 1.0)
    tp = project(AgedPath(sigma, g, a), 1.0)
    gx, _ = canonical_extension(tp)
    from stableweb.cadlag import oscillation
    d = 2.0 ** (-4)
    inner = oscillation(tp.gamma_t, d)
    outer = oscillation(gx, d)
    assert outer == pytest.approx(inner, abs=1e-9) == pytest.approx(0.5, abs=1e-9)


# ---------------------------------------------------------------------------
# first_age_time
# ---------------------------------------------------------------------------


def test_first_age_time_linear():
    p = simple_path(sigma=0.25, horizon=3.0)
    assert first_age_time(p, 2.0 ** (-3)) == pytest.approx(0.25 + 0.125)


def test_first_age_time_never():
    assert first_age_time(simple_path(horizon=2.0), 10.0) is None


def test_first_age_time_bad_level():
    with pytest.raises(ValueError):
        first_age_time(simple_path(), 0.0)


def test_lambda_increment_bound():
    # lambda(2^{-n+1}) - lambda(2^{-n}) <= 2^{-n} for unit-rate growth
    rng = np.random.default_rng(37)
    for _ in range(30):
        p = random_valid_path(rng)
        for n in range(2, 7):
            l1 = first_age_time(p, 2.0 ** (-n))
            l2 = first_age_time(p, 2.0 ** (-n + 1))
            if l1 is None or l2 is None:
                continue
            assert l2 - l1 <= 2.0 ** (-n) + 1e-9


def test_validate_accepts_random_paths():
    rng = np.random.default_rng(41)
    for _ in range(25):
        p = random_valid_path(rng)
        assert validate(p) == [], p.to_dict()


def test_json_roundtrip():
    rng = np.random.default_rng(43)
    p = random_valid_path(rng)
    q = AgedPath.from_json(p.to_json())
    assert q.sigma == p.sigma
    assert q.gamma.equals(p.gamma, 1e-12)
    assert q.age.equals(p.age, 1e-12)
