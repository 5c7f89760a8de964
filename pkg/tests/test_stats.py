import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from skyselect.errors import DataError
from skyselect.stats import GroupSummary, betainc, summary_row, t_test, t_test_raw, t_two_sided_p

# novice (mean, sd), expert (mean, sd), |t|, |d|; n = 23 per group
FLIGHT_ROWS = {
    "total_flight_time": ((902.32, 336.73), (759.06, 163.58), 1.84, 0.54),
    "pitch_1s": ((-12.54, 29.03), (3.97, 24.43), 2.09, 0.62),
    "dist_err_mean": ((873.89, 818.43), (176.67, 205.52), 3.96, 1.17),
    "dist_err_sd": ((675.78, 589.07), (211.52, 225.76), 3.53, 1.04),
}
DWELL_ROWS = {
    "airspeed": ((5.32, 4.98), (8.56, 5.45), 2.11, 0.64),
    "attitude": ((31.03, 12.2), (25.15, 9.23), 1.84, 0.56),
    "vertical_speed": ((5.33, 4.11), (13.11, 8.84), 3.83, 1.15),
    "altitude": ((1.34, 2.22), (2.83, 2.29), 2.24, 0.68),
}


def row_result(row):
    (nm, ns), (em, es), _, _ = row
    return t_test(GroupSummary(23, nm, ns), GroupSummary(23, em, es))


@pytest.mark.parametrize("name", FLIGHT_ROWS)
def test_flight_table_rows(name):
    row = FLIGHT_ROWS[name]
    r = row_result(row)
    assert r.df == 44
    assert abs(abs(r.t) - row[2]) <= 0.02
    assert abs(abs(r.cohen_d) - row[3]) <= 0.02


@pytest.mark.parametrize("name", DWELL_ROWS)
def test_dwell_table_rows(name):
    row = DWELL_ROWS[name]
    r = row_result(row)
    assert abs(abs(r.t) - row[2]) <= 0.02
    assert abs(abs(r.cohen_d) - row[3]) <= 0.03


def test_significance_marks_match_tables():
    assert 0.05 < row_result(FLIGHT_ROWS["total_flight_time"]).p < 0.1
    assert row_result(FLIGHT_ROWS["pitch_1s"]).stars == "*"
    assert row_result(FLIGHT_ROWS["dist_err_mean"]).p < 0.01
    assert row_result(DWELL_ROWS["vertical_speed"]).stars == "***"
    assert row_result(DWELL_ROWS["altitude"]).stars == "*"


def test_identical_groups():
    r = t_test_raw([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert (r.t, r.cohen_d, r.p) == (0.0, 0.0, 1.0)


def test_degenerate_groups():
    r = t_test_raw([0.0] * 4, [1.0] * 4)
    assert r.infinite_t and r.t == -math.inf and r.p == 0.0
    r = t_test_raw([2.0] * 4, [2.0] * 4)
    assert not r.infinite_t and r.t == 0.0
    assert summary_row("x", GroupSummary.of([1.0] * 3), GroupSummary.of([0.0] * 3))["t"] == "inf"


def test_group_validation():
    with pytest.raises(DataError):
        t_test_raw([1.0], [1.0, 2.0])
    with pytest.raises(DataError):
        GroupSummary(1, 0.0, 1.0)
    with pytest.raises(DataError):
        GroupSummary(3, 0.0, -1.0)
    with pytest.raises(DataError):
        GroupSummary.of([1.0, math.nan])


samples = st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30)


@settings(max_examples=100, deadline=None)
@given(samples, samples)
def test_antisymmetry(a, b):
    r, s = t_test_raw(a, b), t_test_raw(b, a)
    if r.infinite_t:
        assert s.infinite_t and s.t == -r.t
        return
    assert s.t == pytest.approx(-r.t, abs=1e-12) and s.cohen_d == pytest.approx(-r.cohen_d, abs=1e-12)
    assert s.p == pytest.approx(r.p, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(samples, samples, st.floats(0.01, 100.0), st.floats(-1e3, 1e3))
def test_affine_invariance(a, b, scale, shift):
    r = t_test_raw(a, b)
    if r.infinite_t or GroupSummary.of(a).sd + GroupSummary.of(b).sd < 1e-3:
        return
    s = t_test_raw(np.array(a) * scale + shift, np.array(b) * scale + shift)
    assert s.t == pytest.approx(r.t, rel=1e-8, abs=1e-10)
    assert s.cohen_d == pytest.approx(r.cohen_d, rel=1e-8, abs=1e-10)
    assert s.p == pytest.approx(r.p, rel=1e-8, abs=1e-10)


def test_raw_equals_summary_exactly():
    rng = np.random.default_rng(3)
    a, b = rng.normal(0, 1, 17), rng.normal(0.5, 2, 12)
    assert t_test_raw(a, b) == t_test(GroupSummary.of(a), GroupSummary.of(b))


def test_sample_sd_uses_n_minus_one():
    assert GroupSummary.of([1.0, 3.0]).sd == pytest.approx(math.sqrt(2.0))


# ------------------------------------------------------------------ p-values


def test_p_at_zero_is_one_and_decreasing():
    assert t_two_sided_p(0.0, 10) == 1.0
    ts = np.linspace(0.0, 8.0, 60)
    for df in (1, 3, 44, 1000):
        ps = [t_two_sided_p(t, df) for t in ts]
        assert all(x > y for x, y in zip(ps, ps[1:]))


def test_normal_limit():
    z = math.erfc(1.96 / math.sqrt(2.0))
    assert t_two_sided_p(1.96, math.inf) == z
    assert abs(t_two_sided_p(1.96, 1e8) - z) < 1e-8
    assert abs(t_two_sided_p(1.96, math.inf) - 0.05) < 1e-4


@pytest.mark.parametrize("df", [1, 2, 5, 44, 300, 1e5])
@pytest.mark.parametrize("t", [0.01, 0.5, 1.96, 3.96, 12.0])
def test_p_against_reference(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * sps.t.sf(t, df), rel=1e-9, abs=1e-12)


def test_cauchy_closed_form():
    # df = 1 is Cauchy: p = 1 - 2 atan(t) / pi
    for t in (0.3, 1.0, 7.0):
        assert t_two_sided_p(t, 1) == pytest.approx(1 - 2 * math.atan(t) / math.pi, abs=1e-12)


def test_betainc_symmetry_and_reference():
    for a, b, x in [(0.5, 0.5, 0.3), (2.0, 5.0, 0.2), (22.0, 0.5, 0.9), (3.0, 3.0, 0.5)]:
        assert betainc(a, b, x) == pytest.approx(sps.beta.cdf(x, a, b), rel=1e-10, abs=1e-14)
        assert betainc(a, b, x) + betainc(b, a, 1 - x) == pytest.approx(1.0, abs=1e-12)
    assert betainc(2.0, 3.0, 0.0) == 0.0 and betainc(2.0, 3.0, 1.0) == 1.0


def test_bad_df():
    with pytest.raises(ValueError):
        t_two_sided_p(1.0, 0)


# ------------------------------------------------------------------ Monte Carlo


def test_vertical_speed_monte_carlo():
    (nm, ns), (em, es), t_reported, _ = DWELL_ROWS["vertical_speed"]
    rng = np.random.default_rng(2024)
    reps, n = 10_000, 23
    a = rng.normal(em, es, (reps, n))
    b = rng.normal(nm, ns, (reps, n))
    sp = np.sqrt((a.var(axis=1, ddof=1) + b.var(axis=1, ddof=1)) / 2)
    t_vec = (a.mean(axis=1) - b.mean(axis=1)) / (sp * math.sqrt(2 / n))
    # the package's t on a few replications matches the vectorized formula
    for i in range(5):
        assert t_test_raw(a[i], b[i]).t == pytest.approx(t_vec[i], rel=1e-12)
    mean_abs = float(np.abs(t_vec).mean())
    se = float(np.abs(t_vec).std(ddof=1)) / math.sqrt(reps)
    # noncentral-t mean at the population effect size is the Monte-Carlo oracle
    delta = (em - nm) / (math.sqrt((ns**2 + es**2) / 2) * math.sqrt(2 / n))
    oracle = float(sps.nct.mean(2 * n - 2, delta))
    assert abs(mean_abs - oracle) <= 4 * se + 0.02  # 0.02 covers unequal-variance skew
    assert abs(mean_abs - t_reported) <= 0.1
