import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fatiguefit import (
    FitConfig,
    ModelSpec,
    bootstrap_ci,
    fit,
    information_criteria,
    make_dataset,
    profile_fatigue_limit,
)
from fatiguefit.inference import REL_LIK_95, ProfileCurve, rank_models, stratified_indices

import synth

# (model, loglik, k, aic, bic, aicc) as published; m = 85 and m = 125
TABLE_85 = [
    ("Ia", -950.16, 5, 1910.3, 1922.5, 1911.1),
    ("Ib", -920.51, 6, 1853.0, 1867.7, 1854.1),
    ("IIa", -960.68, 5, 1931.4, 1943.6, 1932.1),
    ("IIb", -926.97, 6, 1865.9, 1880.6, 1867.0),
    ("IIIa", -938.90, 5, 1887.8, 1900.0, 1888.5),
    ("IIIb", -917.38, 6, 1846.8, 1861.4, 1847.8),
]
TABLE_125 = [
    ("Ia", -889.77, 4, 1787.5, 1798.9, 1787.9),
    ("Ib", -885.28, 5, 1780.6, 1794.7, 1781.1),
    ("IIa", -889.90, 4, 1787.8, 1799.1, 1788.1),
    ("IIb", -885.17, 5, 1780.3, 1794.5, 1780.8),
    ("IIIa", -885.64, 4, 1779.3, 1790.6, 1779.6),
    ("IIIb", -884.67, 5, 1779.3, 1793.5, 1779.8),
]


# 1887.8 + 60/79 = 1888.56; the printed 1888.5 is off by 0.06 whichever
# rounding is applied, so this one cell cannot be matched at 0.05.
PRINTED_MISMATCH = {(85, "IIIa", "aicc")}


def _cells():
    for m, table in ((85, TABLE_85), (125, TABLE_125)):
        for name, ll, k, aic, bic, aicc in table:
            for crit, want in (("aic", aic), ("bic", bic), ("aicc", aicc)):
                marks = []
                if (m, name, crit) in PRINTED_MISMATCH:
                    marks = [pytest.mark.xfail(strict=True, reason="published cell inconsistent with its own AIC")]
                yield pytest.param(m, ll, k, crit, want, id=f"{m}-{name}-{crit}", marks=marks)


@pytest.mark.parametrize("m,ll,k,crit,want", list(_cells()))
def test_information_criteria_reproduce_published_tables(m, ll, k, crit, want):
    ic = information_criteria(ll, k, m)
    assert abs(getattr(ic, crit) - want) <= 0.05


def test_information_criteria_degenerate():
    ic = information_criteria(0.0, 0, 10)
    assert ic.aic == 0 and ic.bic == 0
    assert information_criteria(-5.0, 5, 6).aicc is None


@given(ll=st.floats(-1e5, 1e3), k=st.integers(1, 8), m=st.integers(10, 5000))
def test_aicc_exceeds_aic(ll, k, m):
    ic = information_criteria(ll, k, m)
    assert ic.aicc > ic.aic
    assert ic.aic == 2 * k - 2 * ll


def test_requires_k_and_m():
    with pytest.raises(TypeError):
        information_criteria(-10.0)


def test_relative_likelihood_threshold():
    assert REL_LIK_95 == pytest.approx(0.1465, abs=5e-5)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=60), st.integers(0, 2**31))
@settings(max_examples=100, deadline=None)
def test_stratified_resample_keeps_counts(labels, seed):
    codes = np.asarray(labels)
    idx = stratified_indices(codes, np.random.default_rng(seed))
    assert np.array_equal(codes[idx], codes)


def test_profile_interval_interpolates():
    grid = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    ll = np.array([-10.0, -2.0, 0.0, -1.0, np.nan])
    c = ProfileCurve(grid, ll, 0.0, 3.0)
    lo, hi = c.interval(math.exp(-1.0))
    assert lo == pytest.approx(2.0 + (math.exp(-1) - math.exp(-2)) / (1 - math.exp(-2)))
    assert hi == pytest.approx(4.0)
    assert c.normalized[2] == 1.0
    assert not c.feasible[4]


@pytest.fixture(scope="module")
def ia_case():
    rng = np.random.default_rng(9)
    spec = ModelSpec("I", "a")
    data = synth.simulate(spec, synth.IA_TRUE, 200, rng, ceiling=2e6, groups=rng.choice(["g1", "g2", "g3"], 200).tolist())
    cfg = FitConfig(n_starts=6)
    return data, spec, cfg, fit(data, spec, cfg)


def test_profile_peaks_at_mle(ia_case):
    data, spec, cfg, f = ia_case
    a3 = f.params.A3
    grid = np.concatenate([np.linspace(a3 - 3, a3 + 1, 8), [a3]])
    prof = profile_fatigue_limit(data, spec, cfg, grid=grid, fit=f)
    j = int(np.argmin(np.abs(prof.grid - a3)))
    assert abs(prof.profile_loglik[j] - f.loglik) < 1e-6
    assert prof.normalized[j] == pytest.approx(1.0, abs=1e-6)
    assert np.all(prof.profile_loglik[prof.feasible] <= f.loglik + 1e-6)
    r = prof.normalized[prof.feasible]
    assert np.all((r > 0) & (r <= 1 + 1e-6))


def test_profile_marks_infeasible_points(ia_case):
    data, spec, cfg, f = ia_case
    seq_min = float(np.min(data.arrays["s_max"]))  # Walker stress can exceed S_max for R < 0
    prof = profile_fatigue_limit(data, spec, cfg, grid=(f.params.A3 - 1, 10 * seq_min, 5), fit=f)
    assert not prof.feasible[-1]
    assert prof.grid.size == 5


def test_bootstrap_deterministic_and_ordered(ia_case):
    data, spec, cfg, f = ia_case
    a = bootstrap_ci(data, spec, cfg, reps=100, fit=f, seed=4, workers=1)
    b = bootstrap_ci(data, spec, cfg, reps=100, fit=f, seed=4, workers=1)
    assert a.to_json() == b.to_json()
    assert np.array_equal(a.replicates, b.replicates)
    assert all(lo < hi for lo, hi in zip(a.lower, a.upper))
    assert a.n_failed + a.replicates.shape[0] == 100
    lo, hi = a.interval("A3")
    assert lo < f.params.A3 < hi


@pytest.mark.slow
def test_bootstrap_parallel_matches_serial(ia_case):
    data, spec, cfg, f = ia_case
    a = bootstrap_ci(data, spec, cfg, reps=100, fit=f, seed=2, workers=1)
    b = bootstrap_ci(data, spec, cfg, reps=100, fit=f, seed=2, workers=2)
    assert a.to_json() == b.to_json()


def test_bootstrap_zero_width_when_resampling_is_identity():
    s = [50.0] * 5 + [60.0] * 5 + [70.0] * 5 + [80.0] * 5
    n = [3e5] * 5 + [1e5] * 5 + [5e4] * 5 + [1e4] * 5
    g = ["a"] * 5 + ["b"] * 5 + ["c"] * 5 + ["d"] * 5
    data = make_dataset(s, n, [False] * 20, stress_ratio=[0.0] * 20, group=g)
    res = bootstrap_ci(data, ModelSpec("I", "a"), FitConfig(n_starts=4), reps=100, workers=1)
    assert res.lower == res.upper


def test_bootstrap_rejects_few_reps(ia_case):
    data, spec, cfg, f = ia_case
    with pytest.raises(ValueError):
        bootstrap_ci(data, spec, cfg, reps=50, fit=f)


def test_rank_models_breaks_ties_by_size(ia_case):
    data, spec, cfg, f = ia_case
    from dataclasses import replace

    bigger = replace(f, k=f.k + 1, loglik=f.loglik + 1.0)  # same AIC
    worse = replace(f, loglik=f.loglik - 5)
    order = [r[0] for r in rank_models([worse, bigger, f])]
    assert order == [f, bigger, worse]
