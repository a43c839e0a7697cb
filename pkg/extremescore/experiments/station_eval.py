"""
Station evaluation: fit four models regionally, score every station on its own record.

Usage:
    uv run extremescore eval --config configs/eval.env --out out/eval

Without data_path in the config the stations come from the synthetic world.

Models: gumbel, gev, gev_mu and pgev_lambda, each with one regional shape
(gumbel has none). Scores are in-sample: a station's mean score
S_i = (1/N_i) sum_j S(P_ij, y_j) under its own fitted law per year, with
thresholds at the empirical p-quantile of the station's record.

Comparisons (Delta_i = S_i(first) - S_i(second)):
    A  gev          vs gumbel
    B  pgev_lambda  vs gumbel
    C  pgev_lambda  vs gev
    D  pgev_lambda  vs gev_mu
Each reports the proportion of negative Delta_i, the sign-test p-value with its
rejection limit, and the paired t-test p-value.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from extremescore.config import ExperimentConfig
from extremescore.errors import (
    AllZeroDifferencesError,
    CovariateMissingError,
    DegenerateVarianceError,
    DegenerateWeightError,
    InsufficientDataError,
    MissingStdErrError,
)
from extremescore.experiments.common import empirical_threshold, rule_at, score_cells
from extremescore.inference import (
    FitResult,
    ModelSpec,
    OptimizerConfig,
    RegionalFit,
    fit_mle,
    fitted_gev_arrays,
    trend_significance,
)
from extremescore.results import ExperimentResult
from extremescore.rules import gev_score_array
from extremescore.series import StationSeries
from extremescore.stattests import paired_ttest, sign_test, sign_test_rejection_limit

logger = logging.getLogger(__name__)

FAMILIES = ("gumbel", "gev", "gev_mu", "pgev_lambda")
COMPARISONS: dict[str, tuple[str, str]] = {
    "A": ("gev", "gumbel"),
    "B": ("pgev_lambda", "gumbel"),
    "C": ("pgev_lambda", "gev"),
    "D": ("pgev_lambda", "gev_mu"),
}


def usable_stations(
    data: list[StationSeries], min_years: int, result: ExperimentResult | None = None
) -> list[StationSeries]:
    """Stations with at least min_years non-constant observations; others are logged and tabled."""
    kept = []
    for s in data:
        reason = None
        if len(s) < min_years:
            reason = f"{len(s)} years < {min_years}"
        elif float(np.std(s.y)) == 0.0:
            reason = "constant series"
        if reason is None:
            kept.append(s)
            continue
        logger.warning("skipping station %s: %s", s.station_id, reason)
        if result is not None:
            result.add_row("skipped", {"station_id": s.station_id, "n_years": len(s), "reason": reason})
    return kept


def optimizer_config(cfg: ExperimentConfig, threads: int) -> OptimizerConfig:
    return OptimizerConfig(
        n_restarts=cfg.fit_restarts,
        compute_std_errs=cfg.std_errs,
        min_obs=min(20, cfg.min_years),
        threads=threads,
    )


def fit_families(
    stations: list[StationSeries], families, opt: OptimizerConfig, seed: int
) -> dict[str, RegionalFit]:
    fits = {}
    for fam in families:
        spec = ModelSpec(family=fam)
        fits[fam] = fit_mle(spec, stations, shared_shape=spec.has_shape, optimizer_config=opt, seed=seed)
        logger.info("%s: nll %.3f over %d stations", fam, fits[fam].neg_loglik, len(stations))
    return fits


def station_mean_score(name: str, p: float, fam: str, fit: FitResult, series: StationSeries) -> float:
    """In-sample mean score of one station under its fitted model; NaN for a degenerate weight."""
    mu, sigma, gamma = fitted_gev_arrays(ModelSpec(family=fam), fit, series)
    rule = rule_at(name, empirical_threshold(p, series.y))
    try:
        return float(np.mean(gev_score_array(rule, mu, sigma, gamma, series.y)))
    except DegenerateWeightError as e:
        logger.warning("station %s, %s, %s p=%g: %s", series.station_id, fam, name, p, e)
        return math.nan


def station_score_table(
    stations: list[StationSeries], fits: dict[str, RegionalFit], cells
) -> dict[tuple[str, float], dict[str, np.ndarray]]:
    """{(score, p): {family: per-station mean scores}}."""
    out: dict[tuple[str, float], dict[str, np.ndarray]] = {}
    for name, p in cells:
        out[(name, p)] = {
            fam: np.array(
                [station_mean_score(name, p, fam, fit.stations[i], s) for i, s in enumerate(stations)]
            )
            for fam, fit in fits.items()
        }
    return out


def compare(result: ExperimentResult, name: str, p: float, key: str, first: np.ndarray, second: np.ndarray, alpha: float):
    d = first - second
    d = d[np.isfinite(d)]
    label = f"comparison={key}"
    result.add_summary(name, p, label, "n", d.size)
    try:
        st = sign_test(d)
        result.add_summary(name, p, label, "prop_negative", st.proportion)
        result.add_summary(name, p, label, "sign_p", st.p_value)
        result.add_summary(name, p, label, "reject_below", sign_test_rejection_limit(st.n_effective, alpha))
    except AllZeroDifferencesError as e:
        logger.warning("%s p=%g comparison %s: %s", name, p, key, e)
    try:
        result.add_summary(name, p, label, "ttest_p", paired_ttest(d).p_value)
    except DegenerateVarianceError as e:
        logger.warning("%s p=%g comparison %s: %s", name, p, key, e)


def emit_fit_tables(result: ExperimentResult, stations: list[StationSeries], fits: dict[str, RegionalFit]) -> None:
    for fam, reg in fits.items():
        spec = ModelSpec(family=fam)
        for s, fit in zip(stations, reg.stations):
            _, sigma, _ = fitted_gev_arrays(spec, fit, s)
            result.add_row(
                "fitted_scales",
                {
                    "station_id": s.station_id,
                    "family": fam,
                    "sigma": float(np.mean(sigma)),
                    "gamma": fit.params.get("gamma", 0.0),
                    "converged": fit.converged,
                },
            )
            if spec.trend_param is None:
                continue
            try:
                z, pv = trend_significance(fit, spec.trend_param)
                se = fit.std_errs[spec.trend_param]
            except MissingStdErrError:
                z = pv = se = math.nan
            result.add_row(
                "trends",
                {
                    "station_id": s.station_id,
                    "family": fam,
                    "estimate": fit.params[spec.trend_param],
                    "std_err": se,
                    "z": z,
                    "p_value": pv,
                },
            )


def run_station_eval(
    data: list[StationSeries], cfg: ExperimentConfig, threads: int = 1, dropped_rows: int = 0
) -> ExperimentResult:
    """data must carry covariates (joined beforehand) for the trend models."""
    result = ExperimentResult(experiment=cfg.experiment, master_seed=cfg.master_seed, dropped_rows=dropped_rows)
    stations = usable_stations(data, cfg.min_years, result)
    if not stations:
        raise InsufficientDataError(f"no station has at least {cfg.min_years} usable years")
    missing = [s.station_id for s in stations if s.covariate is None]
    if missing:
        raise CovariateMissingError(f"trend models need a covariate; missing for {', '.join(missing[:5])}")

    fits = fit_families(stations, FAMILIES, optimizer_config(cfg, threads), cfg.master_seed)
    for fam, reg in fits.items():
        if reg.gamma is not None:
            result.add_summary("fit", -math.inf, f"model={fam}", "gamma", reg.gamma)
            if reg.gamma_std_err is not None:
                result.add_summary("fit", -math.inf, f"model={fam}", "gamma_se", reg.gamma_std_err)
        result.add_summary("fit", -math.inf, f"model={fam}", "neg_loglik", reg.neg_loglik)
    emit_fit_tables(result, stations, fits)

    cells = score_cells(cfg.score_set, cfg.threshold_p)
    table = station_score_table(stations, fits, cells)
    for (name, p), by_family in table.items():
        for fam, scores in by_family.items():
            for s, v in zip(stations, scores):
                result.add(name, p, f"model={fam}/station={s.station_id}", 0, v)
            result.add_summary(name, p, f"model={fam}", "mean", float(np.nanmean(scores)))
        for key, (first, second) in COMPARISONS.items():
            compare(result, name, p, key, by_family[first], by_family[second], cfg.alpha)
    logger.info("%d stations scored on %d score cells", len(stations), len(cells))
    return result
