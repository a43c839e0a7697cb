import math

import numpy as np
import pytest

from extremescore.config import build_config
from extremescore.errors import CovariateMissingError, InsufficientDataError
from extremescore.experiments import run_experiment
from extremescore.experiments.lakes import LAKES_TABLE, ab_laws, lakes_preset
from extremescore.experiments.perm_trend import fraction_above, permute_covariates
from extremescore.experiments.station_eval import run_station_eval, usable_stations
from extremescore.experiments.world import LAST_YEAR, MIN_RECORD, covariate_ramp, synthetic_world
from extremescore.results import ExperimentResult

INF = -math.inf


def _records(result, score, p):
    return {r["label"]: r["value"] for r in result.records if r["score"] == score and r["threshold_p"] == p}


def _config(**values):
    return build_config({"master_seed": 11, **values})


# ---------------------------------------------------------------------------
# Simulations
# ---------------------------------------------------------------------------
def test_benchmark_small_run():
    cfg = _config(
        experiment="Benchmark",
        n_draws=3000,
        n_replicates=6,
        series_length=30,
        xi_grid="0.3, 0.6",
        power_nu="1.0, 1.8",
    )
    result, inputs = run_experiment(cfg)
    assert inputs == []
    assert result.stat("CRPS+SCRPS", INF, "best", "xi") in (0.3, 0.6)
    # nu = 1 is the ideal forecast itself: every difference is zero
    assert result.stat("CRPS", INF, "power/nu=1", "power") == 0.0
    ratios = _records(result, "CRPS", INF)
    assert ratios["ratio/xi=0.3/Ideal"] == pytest.approx(100.0)


def test_scale_threshold_scaling():
    cfg = _config(experiment="ScaleThreshold", n_draws=400, sigma_grid="1, 2")
    result, _ = run_experiment(cfg)
    for p in (INF, 0.5, 0.9, 0.99):
        w1 = result.stat("wCRPS", p, "sigma=1", "mean")
        w2 = result.stat("wCRPS", p, "sigma=2", "mean")
        assert w2 == pytest.approx(2.0 * w1, rel=1e-8)
        s1 = result.stat("swCRPS", p, "sigma=1", "mean")
        s2 = result.stat("swCRPS", p, "sigma=2", "mean")
        assert s2 == pytest.approx(s1, rel=1e-8, abs=1e-12)


def test_paired_scale_assembles_from_station_curves():
    cfg = _config(
        experiment="PairedScale", n_draws=300, k_grid="0.8, 1, 1.2", score_set="swCRPS", threshold_p="0.9"
    )
    result, _ = run_experiment(cfg)
    rec = _records(result, "swCRPS", 0.9)
    for a in ("0.8", "1", "1.2"):
        for b in ("0.8", "1", "1.2"):
            combined = 0.5 * (rec[f"station=1/k={a}"] + rec[f"station=2/k={b}"])
            assert rec[f"k1={a}/k2={b}"] == pytest.approx(combined, rel=1e-12)
    assert result.stat("swCRPS", 0.9, "argmax", "k1") in (0.8, 1.0, 1.2)
    assert result.stat("swCRPS", 0.9, "symmetry", "max_abs_diff") >= 0.0


def test_paired_scale_stations_share_draws():
    cfg = _config(experiment="PairedScale", n_draws=2000, k_grid="0.8, 1, 1.5, 2")
    assert cfg.sigma2 == 2.0 * cfg.sigma1
    result, _ = run_experiment(cfg)
    asym = result.stat("swCRPS", 0.9, "symmetry", "max_abs_diff")
    assert asym <= 3.0 * result.stat("swCRPS", 0.9, "symmetry", "pooled_se")
    assert asym == pytest.approx(0.0, abs=1e-9)
    d1 = result.stat("wCRPS", 0.9, "grad@1.5", "dS_dk1")
    d2 = result.stat("wCRPS", 0.9, "grad@1.5", "dS_dk2")
    assert d2 == pytest.approx(2.0 * d1, rel=1e-6)
    assert abs(d2) > abs(d1)


def test_lakes_without_inflation_has_no_differences():
    cfg = _config(experiment="LakesSim", n_replicates=4, series_length=15, k=1.0)
    result, _ = run_experiment(cfg)
    assert len(result.tables["lakes"]) == 5
    assert all(r["value"] == 0.0 for r in result.records)
    assert result.stat("swCRPS", 0.5, "ab=2-4", "proportion") == 0.0


def test_lakes_presets():
    text = lakes_preset("text")
    assert (text[1].sigma, text[3].sigma) == (0.47, 0.22)
    assert lakes_preset("table") == LAKES_TABLE


def test_ab_laws_share_the_mean_shape():
    a, b = ab_laws(LAKES_TABLE, [2, 4], "shared")
    assert a.gamma == b.gamma == pytest.approx(0.5 * (-0.283 - 0.404))
    assert (a.mu, a.sigma, b.mu, b.sigma) == (176.469, 0.395, 183.524, 0.175)
    assert ab_laws(LAKES_TABLE, [2, 4], "station") == (LAKES_TABLE[1], LAKES_TABLE[3])


@pytest.mark.parametrize("ab_shape", ["shared", "station"])
def test_swcrps_lakes_ignore_the_scale_preset(ab_shape):
    runs = {}
    for preset in ("table", "text"):
        cfg = _config(
            experiment="LakesSim", n_replicates=20, series_length=30, lakes_preset=preset, ab_shape=ab_shape
        )
        runs[preset], _ = run_experiment(cfg)
    for p in (INF, 0.5, 0.9):
        for station in (2, 4):
            label = f"station={station}"
            assert runs["text"].stat("swCRPS", p, label, "mean") == pytest.approx(
                runs["table"].stat("swCRPS", p, label, "mean"), rel=1e-9
            )
        assert runs["text"].stat("swCRPS", p, "ab=2-4", "proportion") == runs["table"].stat(
            "swCRPS", p, "ab=2-4", "proportion"
        )


def test_fitted_shape_comparison_uses_the_lake_deltas():
    cfg = _config(experiment="LakesSim", n_replicates=12, series_length=20, ab_shape="station")
    result, _ = run_experiment(cfg)
    for name, p in (("wCRPS", 0.9), ("swCRPS", 0.5)):
        rows = [r for r in result.records if r["score"] == name and r["threshold_p"] == p]
        by = {(r["label"], r["replicate"]): r["value"] for r in rows}
        wins = sum(by[("station=2", r)] - by[("station=4", r)] > 0 for r in range(12))
        assert result.stat(name, p, "ab=2-4", "proportion") == pytest.approx(wins / 12)


@pytest.mark.parametrize("experiment", ["ScaleThreshold", "LakesSim"])
def test_results_do_not_depend_on_threads(experiment):
    cfg = _config(experiment=experiment, n_draws=200, n_replicates=3, series_length=10, sigma_grid="1, 4")
    serial, _ = run_experiment(cfg, threads=1)
    pooled, _ = run_experiment(cfg, threads=3)
    assert serial.records_frame().equals(pooled.records_frame())
    assert serial.summary_frame().equals(pooled.summary_frame())


# ---------------------------------------------------------------------------
# Synthetic world and case studies
# ---------------------------------------------------------------------------
def test_synthetic_world_shape():
    stations, cov = synthetic_world(5, 1.5, 0.1, 7)
    assert [s.station_id for s in stations] == ["S001", "S002", "S003", "S004", "S005"]
    for s in stations:
        assert s.years[-1] == LAST_YEAR
        assert len(s) >= MIN_RECORD
        np.testing.assert_allclose(s.t, covariate_ramp(s.years))
        assert s.covariate == tuple(cov[y] for y in s.years)
    again, _ = synthetic_world(5, 1.5, 0.1, 7)
    assert again == stations


def test_usable_stations_tables_skips(make_series):
    good = make_series("G", np.arange(70.0))
    short = make_series("S", np.arange(10.0))
    flat = make_series("F", np.ones(80))
    res = ExperimentResult(experiment="StationEval", master_seed=11)
    kept = usable_stations([good, short, flat], 60, res)
    assert [s.station_id for s in kept] == ["G"]
    assert [r["station_id"] for r in res.tables["skipped"]] == ["S", "F"]


def test_station_eval_needs_data_and_covariates(make_series):
    cfg = _config(experiment="StationEval")
    with pytest.raises(InsufficientDataError):
        run_station_eval([make_series("A", np.arange(10.0))], cfg)
    with pytest.raises(CovariateMissingError):
        run_station_eval([make_series("A", np.random.default_rng(0).gumbel(size=70))], cfg)


def test_station_eval_on_small_world():
    cfg = _config(
        experiment="StationEval",
        n_stations=4,
        score_set="LS, CRPS",
        threshold_p="0.9",
        fit_restarts=0,
        std_errs="false",
    )
    result, inputs = run_experiment(cfg)
    assert inputs == []
    assert result.stat("CRPS", INF, "comparison=A", "n") == 4
    for fam in ("gumbel", "gev", "gev_mu", "pgev_lambda"):
        assert math.isfinite(result.stat("LS", INF, f"model={fam}", "mean"))
    assert len(result.tables["fitted_scales"]) == 16
    assert {r["family"] for r in result.tables["trends"]} == {"gev_mu", "pgev_lambda"}


def test_fraction_above_counts_ties_as_half():
    assert fraction_above(np.array([3.0, 1.0, 2.0]), np.array([0.0, 2.0, 4.0])) == pytest.approx(0.5)


def test_permuted_covariates_keep_their_values():
    stations, _ = synthetic_world(3, 1.0, 0.1, 2)
    shuffled = permute_covariates(stations, 2, 0)
    for s, p in zip(stations, shuffled):
        assert sorted(s.covariate) == sorted(p.covariate)
        assert s.values == p.values
    assert permute_covariates(stations, 2, 0) == shuffled


@pytest.mark.slow
def test_permutation_trend_small_world():
    cfg = _config(experiment="PermTrend", n_stations=6, fit_restarts=0, std_errs="false")
    result, _ = run_experiment(cfg)
    frac = result.stat("LS", INF, "all", "frac_above")
    assert 0.0 <= frac <= 1.0
