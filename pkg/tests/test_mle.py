
import numpy as np
import pytest

from fatiguefit import (
    FitConfig,
    FitError,
    FittedModel,
    ModelSpec,
    fit,
    make_dataset,
    param_count,
    total_loglik,
)
from fatiguefit.mle import _start_points
from fatiguefit.likelihood import design_for

import synth

IA_SPEC = ModelSpec("I", "a", "walker", "10")


@pytest.fixture(scope="module")
def ia_data():
    rng = np.random.default_rng(5)
    ceiling = synth.ceiling_for(IA_SPEC, synth.IA_TRUE, 0.1, rng)
    return synth.simulate(IA_SPEC, synth.IA_TRUE, 400, rng, ceiling=ceiling)


@pytest.fixture(scope="module")
def ia_fit(ia_data):
    return fit(ia_data, IA_SPEC, FitConfig(n_starts=6, seed=3))


@pytest.mark.parametrize(
    "name,transform,k",
    [("Ia", "walker", 5), ("Ib", "walker", 6), ("IIIb", "walker", 6), ("IIIa", "identity", 4), ("IIb", "identity", 5)],
)
def test_param_count(name, transform, k):
    assert param_count(ModelSpec.from_name(name, transform)) == k


def test_param_count_matches_published_aic():
    assert 2 * param_count(ModelSpec.from_name("Ia")) + 2 * 950.16 == pytest.approx(1910.3, abs=0.05)
    assert 2 * param_count(ModelSpec.from_name("IIIb")) + 2 * 917.38 == pytest.approx(1846.8, abs=0.05)
    assert 2 * param_count(ModelSpec.from_name("IIIa", "identity")) + 2 * 885.64 == pytest.approx(1779.3, abs=0.05)


def test_recovers_generating_parameters(ia_fit):
    p, t = ia_fit.params, synth.IA_TRUE
    assert ia_fit.converged
    assert p.A3 == pytest.approx(t.A3, abs=1.5)
    assert p.q == pytest.approx(t.q, abs=0.05)
    assert p.tau_or_alpha == pytest.approx(t.tau_or_alpha, rel=0.1)
    assert p.A2 == pytest.approx(t.A2, abs=0.3)


def test_fit_reports_maximum_and_bookkeeping(ia_fit, ia_data):
    assert ia_fit.k == 5 and ia_fit.m == ia_data.m
    assert ia_fit.loglik == total_loglik(ia_data, ia_fit.params, IA_SPEC)
    assert ia_fit.loglik >= total_loglik(ia_data, synth.IA_TRUE, IA_SPEC)


def test_feasible_and_positive_scale(ia_fit, ia_data):
    seq = design_for(ia_data, "walker").stress.seq(ia_fit.params.q)
    assert np.all(seq[~ia_data.arrays["runout"]] > ia_fit.params.A3)
    assert ia_fit.params.tau_or_alpha > 0


def test_not_worse_than_any_start(ia_fit, ia_data):
    d = design_for(ia_data, "walker")
    for p0 in _start_points(d, IA_SPEC, FitConfig(n_starts=6, seed=3), None, {}):
        ll0 = total_loglik(ia_data, p0, IA_SPEC)
        assert ia_fit.loglik >= ll0


def test_deterministic(ia_data, ia_fit):
    again = fit(ia_data, IA_SPEC, FitConfig(n_starts=6, seed=3))
    assert again == ia_fit
    assert again.to_json() == ia_fit.to_json()


def test_json_round_trip(ia_fit):
    back = FittedModel.from_json(ia_fit.to_json())
    assert back == ia_fit


def test_fixed_parameter_is_held(ia_data):
    f = fit(ia_data, IA_SPEC, FitConfig(n_starts=2), fixed={"A3": 30.0})
    assert f.params.A3 == 30.0
    assert f.k == 4


def test_infeasible_starts_raise():
    # fixing A3 above every failure stress leaves nothing feasible
    data = make_dataset([50.0, 60.0, 55.0], [1e5, 5e4, 8e4], [False, False, False], stress_ratio=[0.0, 0.0, 0.0])
    with pytest.raises(FitError):
        fit(data, IA_SPEC, FitConfig(n_starts=2), fixed={"A3": 80.0, "q": 0.5})


def test_warm_start_is_tried_first(ia_data, ia_fit):
    f = fit(ia_data, IA_SPEC, FitConfig(n_starts=1), init=ia_fit.params)
    assert f.loglik >= ia_fit.loglik - 1e-6


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(n_starts=0)
    with pytest.raises(ValueError):
        FitConfig(rel_tol=0.0)


@pytest.mark.slow
def test_walker_and_normalized_walker_agree_on_fixed_sign_ratio():
    rng = np.random.default_rng(21)
    data = synth.simulate(IA_SPEC, synth.IA_TRUE, 300, rng, ratios=(0.1, 0.3, 0.5), ceiling=3e6)
    a = fit(data, IA_SPEC, FitConfig(n_starts=6))
    b = fit(data, ModelSpec("I", "a", "nwalker"), FitConfig(n_starts=6))
    assert abs(a.loglik - b.loglik) < 1e-3
