import math

import numpy as np
import pytest
from scipy import stats

from extremescore.distributions import (
    BenchmarkForecast,
    Ensemble,
    GevParams,
    PgevParams,
    TruncatedGev,
    benchmark_cdf,
    benchmark_generate,
    forecast_cdf,
    forecast_logpdf,
    forecast_sample,
    forecast_transform,
    gev_cdf,
    gev_logpdf,
    gev_mean,
    gev_quantile,
    pgev_cdf,
    pgev_to_gev,
)
from extremescore.errors import DomainError, ThresholdTooHighError
from extremescore.numerics import EULER_GAMMA, quad_integral


def test_gev_cdf_at_location(gev012):
    assert gev_cdf(gev012, 0.0) == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_gev_quantile_formula_and_round_trip(gev012):
    q = gev_quantile(gev012, 0.9)
    expected = ((-math.log(0.9)) ** -0.12 - 1.0) / 0.12
    assert q == pytest.approx(expected, rel=1e-13)
    assert q == pytest.approx(2.58352, abs=1e-5)
    assert gev_cdf(gev012, q) == pytest.approx(0.9, rel=1e-13)


def test_gev_quantile_rejects_edges(gev012):
    for p in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            gev_quantile(gev012, p)


def test_gumbel_is_the_small_shape_limit():
    x = np.linspace(-2, 5, 15)
    gum = GevParams(mu=0.3, sigma=1.2, gamma=0.0)
    near = GevParams(mu=0.3, sigma=1.2, gamma=1e-6)
    np.testing.assert_allclose(gev_cdf(gum, x), gev_cdf(near, x), atol=1e-5)
    assert gev_mean(gum) == pytest.approx(0.3 + 1.2 * EULER_GAMMA)


def test_support_end_points():
    pos = GevParams(mu=0.0, sigma=1.0, gamma=0.5)
    assert pos.lower == pytest.approx(-2.0)
    assert gev_cdf(pos, -2.5) == 0.0
    assert gev_logpdf(pos, -2.5) == -math.inf
    neg = GevParams(mu=0.0, sigma=1.0, gamma=-0.5)
    assert neg.upper == pytest.approx(2.0)
    assert gev_cdf(neg, 2.5) == 1.0
    assert gev_logpdf(neg, 2.5) == -math.inf


def test_density_integrates_to_one(gev012):
    total = quad_integral(lambda x: math.exp(gev_logpdf(gev012, x)), gev012.lower, math.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_pgev_matches_mapped_gev():
    p = PgevParams(lam=2.5, sigma_u=0.8, gamma=0.2, u=1.0)
    g = pgev_to_gev(p)
    x = np.linspace(-1.0, 8.0, 25)
    np.testing.assert_allclose(pgev_cdf(p, x), gev_cdf(g, x), rtol=1e-12, atol=1e-15)


def test_pgev_with_unit_rate_is_gev_at_u():
    g = pgev_to_gev(PgevParams(lam=1.0, sigma_u=2.0, gamma=-0.1, u=3.0))
    assert (g.mu, g.sigma, g.gamma) == pytest.approx((3.0, 2.0, -0.1))


def test_truncated_gev(gev012):
    u = float(gev_quantile(gev012, 0.9))
    t = TruncatedGev.above(gev012, u)
    assert forecast_cdf(t, u) == 0.0
    assert forecast_cdf(t, u - 1.0) == 0.0
    x = u + np.array([0.1, 1.0, 5.0])
    expected = (gev_cdf(gev012, x) - 0.9) / 0.1
    np.testing.assert_allclose(forecast_cdf(t, x), expected, rtol=1e-9)
    assert forecast_logpdf(t, u + 1.0) == pytest.approx(gev_logpdf(gev012, u + 1.0) - math.log(0.1), rel=1e-9)
    draws = forecast_transform(t, np.array([0.0001, 0.5, 0.9999]))
    assert np.all(draws > u)


def test_truncation_beyond_the_tail_is_rejected():
    neg = GevParams(mu=0.0, sigma=1.0, gamma=-0.5)
    with pytest.raises(ThresholdTooHighError):
        TruncatedGev.above(neg, 3.0)


def test_forecast_sample_is_sorted_and_reproducible(gev012):
    a = forecast_sample(gev012, 500, 11)
    b = forecast_sample(gev012, 500, 11)
    assert np.all(np.diff(a) >= 0)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(DomainError):
        forecast_sample(gev012, 0, 1)


def test_ensemble_members_sorted_and_cdf():
    ens = Ensemble(members=(3.0, 1.0, 2.0))
    assert ens.members == (1.0, 2.0, 3.0)
    assert forecast_cdf(ens, 2.0) == pytest.approx(2.0 / 3.0)
    with pytest.raises(DomainError):
        forecast_logpdf(ens, 1.0)


def test_mixture_sampling_end_cases():
    u = np.array([0.1, 0.5, 0.9])
    exp_only = BenchmarkForecast(kind="TauInformed", delta=2.0, tau=1.0, xi=0.3)
    np.testing.assert_allclose(forecast_transform(exp_only, u), -np.log1p(-u) / 2.0)
    mixed = BenchmarkForecast(kind="TauInformed", delta=2.0, tau=0.4, xi=0.3)
    y = forecast_transform(mixed, np.linspace(0.01, 0.99, 99))
    assert np.all(y >= 0)


def test_benchmark_cdf_kinds():
    clim = BenchmarkForecast(kind="Climatological", xi=0.5)
    assert benchmark_cdf(clim, 2.0) == pytest.approx(1.0 - (1.0 + 0.5 * 2.0) ** -2.0)
    ext = BenchmarkForecast(kind="Extremist", delta=2.0, nu=2.0)
    assert benchmark_cdf(ext, 1.0) == pytest.approx(1.0 - math.exp(-1.0))


def test_benchmark_generate_shapes_and_modes():
    seed = 5
    runs = benchmark_generate(0.4, 3, 50, seed)
    assert len(runs) == 3
    for delta, y in runs:
        assert delta.shape == y.shape == (50,)
        assert np.all(delta > 0) and np.all(y >= 0)
    again = benchmark_generate(0.4, 3, 50, seed)
    np.testing.assert_array_equal(runs[2][1], again[2][1])
    ((delta, _),) = benchmark_generate(0.4, 1, 20, 1, latent="per_series")
    assert np.unique(delta).size == 1
    with pytest.raises(DomainError):
        benchmark_generate(1.0, 1, 10, 0)


def test_latent_rates_have_unit_mean():
    ((delta, _),) = benchmark_generate(0.5, 1, 200_000, 3)
    assert np.mean(delta) == pytest.approx(1.0, abs=0.01)
    assert np.var(delta) == pytest.approx(0.5, abs=0.02)


@pytest.mark.parametrize("xi", [0.2, 0.5, 0.8])
def test_benchmark_marginal_is_generalized_pareto(xi):
    ((_, y),) = benchmark_generate(xi, 1, 100_000, 11)
    assert stats.kstest(y, stats.genpareto(c=xi).cdf).statistic < 0.01
