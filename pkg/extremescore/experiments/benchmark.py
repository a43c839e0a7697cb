"""
Benchmark study: latent-rate exponential observations scored by CRPS and SCRPS.

Usage:
    uv run extremescore bench --config configs/bench.env --out out/bench

Two parts:
    ratios  mean score of each forecast over n_draws hierarchical draws,
            as a percentage of the ideal forecast's mean (both are negative,
            so > 100% is worse), for every xi in the grid; the xi whose
            ratios sit closest to the reference ratios is reported
    power   for each nu, n_replicates series of length series_length; the
            ideal and extremist forecasts are compared per series with the
            Wilcoxon signed-rank test; power = share of p < alpha
"""

from __future__ import annotations

import logging

import numpy as np

from extremescore.config import ExperimentConfig
from extremescore.distributions import BenchmarkForecast, benchmark_generate
from extremescore.errors import AllZeroDifferencesError
from extremescore.experiments.common import UNWEIGHTED, fmt
from extremescore.results import ExperimentResult
from extremescore.scoring_closed import crps_benchmark, scrps_benchmark
from extremescore.seeding import run_units, unit_seed
from extremescore.stattests import wilcoxon_signed_rank

logger = logging.getLogger(__name__)

# Published percentage ratios (CRPS, SCRPS) used to pick the best-matching xi.
REFERENCE_RATIOS: dict[str, tuple[float, float]] = {
    "Extremist nu=1.1": (100.48, 100.41),
    "Informed tau=0.75": (100.89, 101.28),
    "Informed tau=0.5": (103.56, 103.76),
    "Extremist nu=1.4": (106.67, 104.62),
    "Informed tau=0.25": (108.02, 107.20),
    "Climatological": (114.27, 113.67),
    "Extremist nu=1.8": (122.87, 112.69),
}


def forecast_label(f: BenchmarkForecast) -> str:
    if f.kind == "Extremist":
        return f"Extremist nu={fmt(f.nu)}"
    if f.kind == "TauInformed":
        return f"Informed tau={fmt(f.tau)}"
    return f.kind


def benchmark_forecasts(xi: float, nu_list, tau_list) -> list[BenchmarkForecast]:
    out = [BenchmarkForecast(kind="Ideal", xi=xi)]
    out += [BenchmarkForecast(kind="Extremist", nu=nu, xi=xi) for nu in nu_list]
    out += [BenchmarkForecast(kind="TauInformed", tau=tau, xi=xi) for tau in tau_list]
    out.append(BenchmarkForecast(kind="Climatological", xi=xi))
    return out


def _score(name: str, f: BenchmarkForecast, y, delta):
    fn = crps_benchmark if name == "CRPS" else scrps_benchmark
    return np.asarray(fn(f, y, delta=delta), dtype=float)


def mean_score_ratios(
    xi: float, n_draws: int, seed, nu_list, tau_list, scores=("CRPS", "SCRPS"), latent="per_observation"
) -> dict[tuple[str, str], float]:
    """{(score, forecast label): 100 * mean / mean_ideal} on one hierarchical sample."""
    ((delta, y),) = benchmark_generate(xi, 1, n_draws, seed, latent=latent)
    ratios: dict[tuple[str, str], float] = {}
    for name in scores:
        ideal = float(np.mean(_score(name, BenchmarkForecast(kind="Ideal", xi=xi), y, delta)))
        for f in benchmark_forecasts(xi, nu_list, tau_list):
            ratios[(name, forecast_label(f))] = 100.0 * float(np.mean(_score(name, f, y, delta))) / ideal
    return ratios


def ratio_mismatch(ratios: dict[tuple[str, str], float]) -> float:
    """Sum of squared differences to the reference ratios over the labels present."""
    total = 0.0
    for label, (ref_crps, ref_scrps) in REFERENCE_RATIOS.items():
        for name, ref in (("CRPS", ref_crps), ("SCRPS", ref_scrps)):
            if (name, label) in ratios:
                total += (ratios[(name, label)] - ref) ** 2
    return total


def wilcoxon_power_replicate(xi: float, nu_grid, series_length: int, seed, scores, latent):
    """p-values of ideal vs extremist on one series, for every (score, nu)."""
    ((delta, y),) = benchmark_generate(xi, 1, series_length, seed, latent=latent)
    out: dict[tuple[str, float], float] = {}
    ideal = BenchmarkForecast(kind="Ideal", xi=xi)
    for name in scores:
        s_ideal = _score(name, ideal, y, delta)
        for nu in nu_grid:
            s_ext = _score(name, BenchmarkForecast(kind="Extremist", nu=nu, xi=xi), y, delta)
            try:
                out[(name, nu)] = wilcoxon_signed_rank(s_ideal - s_ext).p_value
            except AllZeroDifferencesError:
                out[(name, nu)] = 1.0
    return out


def run_benchmark(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    result = ExperimentResult(experiment=cfg.experiment, master_seed=cfg.master_seed)
    scores = [s for s in cfg.score_set if s in ("CRPS", "SCRPS")]
    xi_values = [cfg.xi] if cfg.xi is not None else list(cfg.xi_grid)

    def ratio_unit(i: int):
        xi = xi_values[i]
        return xi, mean_score_ratios(
            xi, cfg.n_draws, unit_seed(cfg.master_seed, 0, i), cfg.nu_list, cfg.tau_list, scores, cfg.latent
        )

    best_xi, best_err = None, np.inf
    for i, (xi, ratios) in enumerate(run_units(ratio_unit, range(len(xi_values)), threads)):
        for (name, label), val in ratios.items():
            result.add(name, UNWEIGHTED, f"ratio/xi={fmt(xi)}/{label}", 0, val)
        err = ratio_mismatch(ratios)
        result.add_summary("CRPS+SCRPS", UNWEIGHTED, f"xi={fmt(xi)}", "ratio_sse", err)
        logger.info("xi=%s: %d forecast ratios, mismatch %.3f", fmt(xi), len(ratios), err)
        if err < best_err:
            best_xi, best_err = xi, err
    result.add_summary("CRPS+SCRPS", UNWEIGHTED, "best", "xi", best_xi)

    power_xi = cfg.xi if cfg.xi is not None else best_xi
    nu_grid = list(cfg.power_nu)

    def power_unit(r: int):
        return wilcoxon_power_replicate(
            power_xi, nu_grid, cfg.series_length, unit_seed(cfg.master_seed, 1, r), scores, cfg.latent
        )

    pvals = run_units(power_unit, range(cfg.n_replicates), threads)
    for name in scores:
        for nu in nu_grid:
            label = f"power/nu={fmt(nu)}"
            ps = np.array([rep[(name, nu)] for rep in pvals])
            for r, p in enumerate(ps):
                result.add(name, UNWEIGHTED, label, r, p)
            result.add_summary(name, UNWEIGHTED, label, "power", float(np.mean(ps < cfg.alpha)))
            q1, q2, q3 = np.quantile(ps, [0.25, 0.5, 0.75])
            result.add_summary(name, UNWEIGHTED, label, "p_q1", q1)
            result.add_summary(name, UNWEIGHTED, label, "p_median", q2)
            result.add_summary(name, UNWEIGHTED, label, "p_q3", q3)
    logger.info("power study at xi=%s: %d replicates x %d nu values", fmt(power_xi), cfg.n_replicates, len(nu_grid))
    return result
