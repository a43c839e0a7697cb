import itertools

import numpy as np
import pytest

from extremescore.distributions import GevParams, forecast_sample, gev_quantile
from extremescore.errors import DegenerateSampleError, DomainError, SampleTooSmallError
from extremescore.kernel_mc import (
    PerturbationSpec,
    conditional_expected_score,
    ensemble_kernel_terms,
    mc_kernel_estimate,
    mc_scaled_kernel_estimate,
    quantile_grid_ensemble,
    scale_function_estimate,
)
from extremescore.rules import ScoreRule
from extremescore.scoring_closed import swcrps_gev, wcrps_gev
from extremescore.weights import WeightSpec


def test_pair_sums_match_brute_force():
    rng = np.random.default_rng(4)
    x = rng.normal(size=30)
    weight = WeightSpec.quantile(0.2)
    w = np.sort(weight.chain(x))
    w_y = float(weight.chain(0.9))

    pairs = [abs(a - b) for a, b in itertools.permutations(w, 2)]
    e_pair, e_obs = ensemble_kernel_terms(w, w_y, fair=True)
    assert e_pair == pytest.approx(np.mean(pairs), rel=1e-12)
    assert float(e_obs) == pytest.approx(np.mean(np.abs(w - w_y)), rel=1e-12)

    plug_in, _ = ensemble_kernel_terms(w, w_y, fair=False)
    assert plug_in == pytest.approx(np.sum(pairs) / w.size**2, rel=1e-12)


def test_two_member_ensemble():
    est = mc_kernel_estimate([0.0, 1.0], WeightSpec.unweighted(), 0.0)
    assert est.e_pair == pytest.approx(1.0)
    assert est.e_obs == pytest.approx(0.5)
    assert est.value == pytest.approx(0.0)


def test_monte_carlo_agrees_with_closed_form(gev012):
    sample = forecast_sample(gev012, 20_000, 21)
    q = float(gev_quantile(gev012, 0.5))
    weight = WeightSpec.quantile(q)
    y = 2.0

    est = mc_kernel_estimate(sample, weight, y)
    assert abs(est.value - wcrps_gev(gev012, weight, y)) < 5.0 * est.std_err
    scaled = mc_scaled_kernel_estimate(sample, weight, y)
    assert abs(scaled.value - swcrps_gev(gev012, weight, y)) < 5.0 * scaled.std_err


def test_sample_errors():
    with pytest.raises(SampleTooSmallError):
        mc_kernel_estimate([1.0], WeightSpec.unweighted(), 0.0)
    with pytest.raises(DegenerateSampleError):
        mc_scaled_kernel_estimate([0.1, 0.2, 0.3], WeightSpec.quantile(5.0), 1.0)


def test_quantile_grid_ensemble(gev012):
    ens = quantile_grid_ensemble(gev012, 400)
    assert ens.size == 400
    assert ens.members[199] < float(gev_quantile(gev012, 0.5)) < ens.members[200]


def test_perturbation_needs_unit_direction(gev012):
    with pytest.raises(ValueError):
        PerturbationSpec(direction=(1.0, 1.0), magnitude=0.01, base=gev012)
    p = PerturbationSpec(direction=(0.0, 1.0), magnitude=0.05, base=gev012).perturbed()
    assert p.sigma == pytest.approx(1.05)
    assert p.mu == 0.0


def test_scale_function_scaling_across_sigma():
    small = GevParams(mu=0.0, sigma=1.0, gamma=0.1)
    large = GevParams(mu=0.0, sigma=2.0, gamma=0.1)
    r = (0.0, 1.0)

    crps_1 = scale_function_estimate(ScoreRule.crps(), small, r, n=2000, seed=3)
    crps_2 = scale_function_estimate(ScoreRule.crps(), large, r, n=2000, seed=3)
    assert crps_2.value == pytest.approx(2.0 * crps_1.value, rel=1e-7)

    scrps_1 = scale_function_estimate(ScoreRule.scrps(), small, r, n=2000, seed=3)
    scrps_2 = scale_function_estimate(ScoreRule.scrps(), large, r, n=2000, seed=3)
    assert scrps_2.value == pytest.approx(scrps_1.value, rel=1e-7)


def test_scale_function_rejects_wide_grid(gev012):
    with pytest.raises(DomainError):
        scale_function_estimate(ScoreRule.crps(), gev012, (0.0, 1.0), t_grid=(0.2,), n=100)
    with pytest.raises(DomainError):
        scale_function_estimate(ScoreRule.crps(), gev012, (0.0, 1.0), t_grid=(), n=100)


def test_conditional_expected_score(gev012):
    u = float(gev_quantile(gev012, 0.9))
    with pytest.raises(DomainError):
        conditional_expected_score(ScoreRule.ls(), gev012, gev012, u, 50, 0)
    mean, se = conditional_expected_score(ScoreRule.ls(), gev012, gev012, u, 2000, 0)
    assert np.isfinite(mean) and se > 0
    again = conditional_expected_score(ScoreRule.ls(), gev012, gev012, u, 2000, 0)
    assert again == (mean, se)
