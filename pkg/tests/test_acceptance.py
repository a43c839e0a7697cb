"""Acceptance-scale checks. Minutes each; run with `uv run pytest -m slow`."""

import math

import numpy as np
import pytest

from extremescore.config import build_config
from extremescore.distributions import GevParams, forecast_sample, gev_cdf, gev_quantile
from extremescore.experiments import run_experiment
from extremescore.experiments.lakes import LAKES_TABLE
from extremescore.inference import ModelSpec, OptimizerConfig, fit_mle
from extremescore.kernel_mc import mc_kernel_estimate, mc_scaled_kernel_estimate, scale_function_estimate
from extremescore.numerics import quad_wcrps_oracle
from extremescore.rules import ScoreRule, evaluate_score
from extremescore.scoring_closed import crps_gev, swcrps_gev, wcrps_gev
from extremescore.series import StationSeries
from extremescore.weights import WeightSpec

pytestmark = pytest.mark.slow

INF = -math.inf


def _random_cases(n: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        law = GevParams(mu=rng.normal(0, 2), sigma=rng.uniform(0.3, 3.0), gamma=rng.uniform(-0.45, 0.45))
        prob = rng.choice([-1.0, 0.5, 0.9, 0.99])
        q = law.lower if prob < 0 else float(gev_quantile(law, prob))
        y = float(gev_quantile(law, rng.uniform(0.01, 0.999)))
        yield law, q, y


def test_closed_forms_against_quadrature():
    for law, q, y in _random_cases(200, 1):
        support = (law.lower, law.upper)
        exact = quad_wcrps_oracle(lambda x: gev_cdf(law, x), WeightSpec.unweighted(), y, support=support)
        assert crps_gev(law, y) == pytest.approx(exact, abs=1e-6)
        if math.isfinite(q):
            w = WeightSpec.quantile(q)
            tail = quad_wcrps_oracle(lambda x: gev_cdf(law, x), w, y, support=support)
            assert wcrps_gev(law, w, y) == pytest.approx(tail, abs=1e-6)


def test_kernel_estimators_against_closed_forms():
    for i, (law, q, y) in enumerate(_random_cases(50, 2)):
        w = WeightSpec.quantile(q) if math.isfinite(q) else WeightSpec.unweighted()
        sample = forecast_sample(law, 100_000, i)
        est = mc_kernel_estimate(sample, w, y)
        assert abs(est.value - wcrps_gev(law, w, y)) <= 4.0 * est.std_err
        scaled = mc_scaled_kernel_estimate(sample, w, y)
        assert abs(scaled.value - swcrps_gev(law, w, y)) <= 4.0 * scaled.std_err


@pytest.mark.parametrize("name", ["CRPS", "SCRPS", "wCRPS", "swCRPS", "LS", "LSq"])
def test_truth_is_never_beaten(name, gev012):
    y = forecast_sample(gev012, 100_000, 5)
    rule = ScoreRule.named(name, float(gev_quantile(gev012, 0.9)))
    s_truth = np.asarray(evaluate_score(rule, gev012, y))
    for dmu in (-0.5, -0.25, 0.0, 0.25, 0.5):
        for k in (0.6, 0.8, 1.0, 1.25, 1.5):
            other = GevParams(mu=dmu, sigma=k, gamma=0.12)
            d = s_truth - np.asarray(evaluate_score(rule, other, y))
            assert np.mean(d) >= -3.0 * np.std(d, ddof=1) / math.sqrt(d.size)


def test_scale_functions_across_sigma():
    c = {}
    for sigma in (1.0, 2.0, 4.0):
        base = GevParams(mu=0.0, sigma=sigma, gamma=0.12)
        c[sigma] = {
            name: scale_function_estimate(ScoreRule.named(name), base, (0.0, 1.0), n=200_000, seed=9).value
            for name in ("LS", "SCRPS", "CRPS")
        }
    for name in ("LS", "SCRPS"):
        assert c[4.0][name] == pytest.approx(c[1.0][name], rel=0.1)
        assert c[2.0][name] == pytest.approx(c[1.0][name], rel=0.1)
    assert c[4.0]["CRPS"] >= 2.0 * c[1.0]["CRPS"]


@pytest.mark.parametrize("name", ["swCRPS", "LSq", "wCRPS"])
def test_tail_scale_functions_across_sigma(name):
    c = {}
    for sigma in (1.0, 2.0, 4.0):
        base = GevParams(mu=0.0, sigma=sigma, gamma=0.12)
        u = float(gev_quantile(base, 0.9))
        c[sigma] = scale_function_estimate(ScoreRule.named(name, u), base, (0.0, 1.0), u=u, n=50_000, seed=9).value
    if name == "wCRPS":
        # linear in sigma on common draws
        assert c[2.0] == pytest.approx(2.0 * c[1.0], rel=1e-6)
        assert c[4.0] == pytest.approx(2.0 * c[2.0], rel=1e-6)
        assert c[4.0] >= 2.0 * c[1.0]
    else:
        assert c[1.0] > 0.0
        assert max(c.values()) <= 1.15 * min(c.values())


def test_benchmark_orderings():
    cfg = build_config(
        {
            "experiment": "Benchmark",
            "master_seed": 1,
            "xi": 0.5,
            "n_draws": 200_000,
            "n_replicates": 1,
            "power_nu": "1.5",
        }
    )
    result, _ = run_experiment(cfg)
    rec = {r["label"]: r["value"] for r in result.records if r["score"] == "CRPS" and r["label"].startswith("ratio/")}
    ext = [rec[f"ratio/xi=0.5/Extremist nu={nu}"] for nu in ("1.1", "1.4", "1.8")]
    inf = [rec[f"ratio/xi=0.5/Informed tau={tau}"] for tau in ("0.75", "0.5", "0.25")]
    assert ext == sorted(ext) and ext[0] > 100.0
    assert inf == sorted(inf) and inf[0] > 100.0


def test_benchmark_rank_inversion_and_power():
    cfg = build_config({"experiment": "Benchmark", "master_seed": 1})
    result, _ = run_experiment(cfg)

    ratios = {(r["score"], r["label"]): r["value"] for r in result.records if r["label"].startswith("ratio/")}

    def ratio(name, xi, label):
        return ratios[(name, f"ratio/xi={xi:g}/{label}")]

    inverted = [
        xi
        for xi in cfg.xi_grid
        if ratio("CRPS", xi, "Climatological") < ratio("CRPS", xi, "Extremist nu=1.8")
        and ratio("SCRPS", xi, "Extremist nu=1.8") < ratio("SCRPS", xi, "Climatological")
    ]
    assert inverted

    n = cfg.n_replicates
    power = {
        name: [result.stat(name, INF, f"power/nu={nu:g}", "power") for nu in cfg.power_nu]
        for name in ("CRPS", "SCRPS")
    }
    for curve in power.values():
        assert all(b >= a - 0.02 for a, b in zip(curve, curve[1:]))
    assert power["SCRPS"][-1] >= 0.9
    for pc, ps in zip(power["CRPS"], power["SCRPS"]):
        se = math.sqrt((pc * (1 - pc) + ps * (1 - ps)) / n)
        assert ps >= pc - 2.0 * se - 1.0 / n


def test_scale_threshold_study():
    cfg = build_config({"experiment": "ScaleThreshold", "master_seed": 2})
    result, _ = run_experiment(cfg)
    for p in cfg.threshold_p:
        sw = [result.stat("swCRPS", p, f"sigma={s:g}", "mean") for s in cfg.sigma_grid]
        assert max(sw) - min(sw) <= 0.15 * abs(np.mean(sw))
        w1 = result.stat("wCRPS", p, "sigma=1", "mean")
        w8 = result.stat("wCRPS", p, "sigma=8", "mean")
        assert w8 >= 4.0 * w1


def test_lakes_study():
    cfg = build_config({"experiment": "LakesSim", "master_seed": 1})
    assert cfg.n_replicates == 1000
    result, _ = run_experiment(cfg)

    # Superior has the smallest scale
    for stat in ("mean", "sd"):
        w = [result.stat("wCRPS", INF, f"station={i}", stat) for i in range(1, 6)]
        assert int(np.argmin(w)) == 3
    assert result.stat("wCRPS", INF, "ab=2-4", "proportion") >= 0.6

    sw = [result.stat("swCRPS", 0.9, f"station={i}", "mean") for i in range(1, 6)]
    centre = float(np.mean(sw))
    assert all(abs(s - centre) <= 0.15 * abs(centre) for s in sw)
    for p in cfg.threshold_p:
        assert 0.45 <= result.stat("swCRPS", p, "ab=2-4", "proportion") <= 0.55


# published standard errors (mu, sigma, gamma) for the 103-year lake records
LAKE_STD_ERRS = (
    (0.038, 0.027, 0.065),
    (0.044, 0.033, 0.082),
    (0.034, 0.024, 0.053),
    (0.019, 0.014, 0.063),
    (0.038, 0.027, 0.060),
)


@pytest.mark.parametrize("lake", range(5))
def test_gev_fits_recover_lake_parameters(lake):
    law = LAKES_TABLE[lake]
    cfg = OptimizerConfig(n_restarts=1)
    fits = []
    for r in range(200):
        y = forecast_sample(law, 100, [lake, r])
        s = StationSeries(station_id=f"R{r}", years=tuple(range(1900, 2000)), values=tuple(float(v) for v in y))
        fits.append(fit_mle(ModelSpec(family="gev"), s, optimizer_config=cfg, seed=r))
    with_se = [f.std_errs for f in fits if f.std_errs is not None]
    assert len(with_se) >= 150
    for name, se in zip(("mu", "sigma", "gamma"), LAKE_STD_ERRS[lake]):
        truth = getattr(law, name)
        assert abs(np.mean([f.params[name] for f in fits]) - truth) <= 2.0 * se
        typical = float(np.median([e[name] for e in with_se]))
        assert se / 2.0 <= typical <= 2.0 * se


def test_trend_world_favours_the_trend_model():
    cfg = build_config(
        {
            "experiment": "StationEval",
            "master_seed": 4,
            "n_stations": 20,
            "score_set": "LS",
            "fit_restarts": 1,
            "std_errs": "false",
        }
    )
    result, _ = run_experiment(cfg)
    pgev = result.stat("LS", INF, "model=pgev_lambda", "mean")
    assert pgev > result.stat("LS", INF, "model=gev", "mean")
    assert pgev > result.stat("LS", INF, "model=gumbel", "mean")
    # the truth trends, so the stationary families lose at most stations
    for key in ("B", "C"):
        label = f"comparison={key}"
        assert result.stat("LS", INF, label, "prop_negative") <= result.stat("LS", INF, label, "reject_below")


def test_permutation_diagnostic_with_trend():
    cfg = build_config(
        {"experiment": "PermTrend", "master_seed": 5, "n_stations": 20, "fit_restarts": 1, "std_errs": "false"}
    )
    result, _ = run_experiment(cfg)
    assert result.stat("LS", INF, "all", "frac_above") >= 0.8


def test_permutation_diagnostic_without_trend():
    fracs = []
    for world in range(30):
        cfg = build_config(
            {
                "experiment": "PermTrend",
                "master_seed": 100 + world,
                "n_stations": 10,
                "world_trend": 0.0,
                "fit_restarts": 1,
                "std_errs": "false",
            }
        )
        result, _ = run_experiment(cfg)
        fracs.append(result.stat("LS", INF, "all", "frac_above"))
    assert 0.35 <= np.mean(fracs) <= 0.65
