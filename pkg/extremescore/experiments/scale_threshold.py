"""
Scale/threshold study: expected score loss of a too-wide forecast as the truth's scale grows.

For every (sigma, p, score) cell the truth is GEV(0, sigma, gamma), the forecast
GEV(0, forecast_scale * sigma, gamma), the threshold q(p) the truth's p-quantile,
and the cell reports mean and sd of S(Q, y) - S(P, y) over n_draws truth draws.
All cells reuse one uniform stream, so draws at different sigma are rescaled
copies of each other.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from extremescore.config import ExperimentConfig
from extremescore.distributions import GevParams, gev_quantile_array, uniform_stream
from extremescore.experiments.common import fmt, model_threshold, rule_at, score_cells
from extremescore.results import ExperimentResult
from extremescore.rules import evaluate_score
from extremescore.seeding import run_units, unit_rng

logger = logging.getLogger(__name__)


def score_difference(truth: GevParams, forecast: GevParams, name: str, p: float, y: np.ndarray) -> np.ndarray:
    rule = rule_at(name, model_threshold(p, truth))
    return np.asarray(evaluate_score(rule, truth, y), dtype=float) - np.asarray(
        evaluate_score(rule, forecast, y), dtype=float
    )


def run_scale_threshold(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    result = ExperimentResult(experiment=cfg.experiment, master_seed=cfg.master_seed)
    cells = [
        (sigma, name, p)
        for sigma in cfg.sigma_grid
        for name, p in score_cells(cfg.score_set, cfg.threshold_p)
    ]

    def unit(i: int):
        sigma, name, p = cells[i]
        v = uniform_stream(cfg.n_draws, unit_rng(cfg.master_seed, 0))
        truth = GevParams(mu=0.0, sigma=sigma, gamma=cfg.gamma)
        y = gev_quantile_array(truth.mu, truth.sigma, truth.gamma, v)
        d = score_difference(truth, truth.rescaled(cfg.forecast_scale), name, p, y)
        return float(np.mean(d)), float(np.std(d, ddof=1))

    stats = run_units(unit, range(len(cells)), threads)
    for (sigma, name, p), (mean, sd) in zip(cells, stats):
        label = f"sigma={fmt(sigma)}"
        result.add(name, p, label, 0, mean)
        result.add_summary(name, p, label, "mean", mean)
        result.add_summary(name, p, label, "sd", sd)
        result.add_summary(name, p, label, "se", sd / math.sqrt(cfg.n_draws))
    logger.info("%d cells x %d draws scored", len(cells), cfg.n_draws)
    return result
