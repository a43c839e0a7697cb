"""
Experiment drivers, one module per study, and the name -> runner registry.

Usage:
    from extremescore.config import parse_config
    from extremescore.experiments import run_experiment

    result, inputs = run_experiment(parse_config("configs/scale.env"), threads=4)
"""

from __future__ import annotations

import logging
from pathlib import Path

from extremescore.config import ExperimentConfig
from extremescore.experiments.benchmark import run_benchmark
from extremescore.experiments.lakes import run_lakes_sim
from extremescore.experiments.paired_scale import run_paired_scale
from extremescore.experiments.perm_trend import run_permutation_trend
from extremescore.experiments.scale_threshold import run_scale_threshold
from extremescore.experiments.station_eval import run_station_eval
from extremescore.experiments.world import synthetic_world
from extremescore.results import ExperimentResult
from extremescore.series import StationSeries, join_covariate, load_covariate_csv, load_station_csv

logger = logging.getLogger(__name__)

SIMULATIONS = {
    "Benchmark": run_benchmark,
    "ScaleThreshold": run_scale_threshold,
    "PairedScale": run_paired_scale,
    "LakesSim": run_lakes_sim,
}
CASE_STUDIES = {
    "StationEval": run_station_eval,
    "PermTrend": run_permutation_trend,
}


def case_study_data(cfg: ExperimentConfig) -> tuple[list[StationSeries], int, list[Path]]:
    """(stations with covariates, dropped rows, input files) from data_path or the synthetic world."""
    if cfg.data_path is None:
        logger.info("no data_path given; generating a synthetic world of %d stations", cfg.n_stations)
        stations, _ = synthetic_world(cfg.n_stations, cfg.world_trend, cfg.world_gamma, cfg.master_seed)
        return stations, 0, []

    inputs = [Path(cfg.data_path)]
    load = load_station_csv(cfg.data_path, cfg.min_years)
    stations = load.series
    if cfg.covariate_path is not None:
        inputs.append(Path(cfg.covariate_path))
        stations = join_covariate(stations, load_covariate_csv(cfg.covariate_path))
    logger.info(
        "loaded %d stations (%d rows dropped, %d below %d years)",
        len(stations), load.dropped_rows, len(load.short_stations), cfg.min_years,
    )
    return stations, load.dropped_rows, inputs


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> tuple[ExperimentResult, list[Path]]:
    if cfg.experiment in SIMULATIONS:
        return SIMULATIONS[cfg.experiment](cfg, threads), []
    stations, dropped, inputs = case_study_data(cfg)
    return CASE_STUDIES[cfg.experiment](stations, cfg, threads, dropped), inputs


__all__ = [
    "run_benchmark",
    "run_scale_threshold",
    "run_paired_scale",
    "run_lakes_sim",
    "run_station_eval",
    "run_permutation_trend",
    "run_experiment",
    "case_study_data",
]
