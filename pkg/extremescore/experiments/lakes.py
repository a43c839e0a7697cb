"""
Lake-level study: five GEV stations, each forecast with its scale inflated by k.

Usage:
    uv run extremescore sim-lakes --config configs/lakes.env --out out/lakes

Per replicate and station a series of series_length annual maxima is drawn
from the station's law and scored under the truth and under GEV(mu, k sigma,
gamma); Delta_i is the mean score difference S_truth - S_k.

The A/B part compares stations a and b (ab_stations, default 2 and 4):
model A is the truth at a and inflated at b, model B the reverse. Averaged
over the two stations A beats B exactly when Delta_a - Delta_b > 0, so the
reported proportion is the share of replicates where that holds.

Under a scale-invariant score Delta depends on a station's law only through
its shape, so two lakes with different fitted shapes are not exchangeable
even when the score ignores scale. With ab_shape = shared (default) both A/B
stations take the mean of their two shapes and keep their own location and
scale; a fair score then gives one half. ab_shape = station keeps the fitted
shapes.
"""

from __future__ import annotations

import logging

import numpy as np

from extremescore.config import ExperimentConfig
from extremescore.distributions import GevParams, gev_quantile_array, uniform_stream
from extremescore.experiments.common import fmt, model_threshold, rule_at, score_cells
from extremescore.results import ExperimentResult
from extremescore.rules import evaluate_score
from extremescore.seeding import run_units, unit_rng
from extremescore.stattests import wilson_interval

logger = logging.getLogger(__name__)

LAKE_NAMES = ("St. Clair", "Michigan-Huron", "Ontario", "Superior", "Erie")

LAKES_TABLE: tuple[GevParams, ...] = (
    GevParams(mu=175.108, sigma=0.349, gamma=-0.285),
    GevParams(mu=176.469, sigma=0.395, gamma=-0.283),
    GevParams(mu=74.990, sigma=0.322, gamma=-0.285),
    GevParams(mu=183.524, sigma=0.175, gamma=-0.404),
    GevParams(mu=174.280, sigma=0.355, gamma=-0.348),
)


def lakes_preset(name: str) -> tuple[GevParams, ...]:
    """`table` as published; `text` swaps in sigma 0.47 (lake 2) and 0.22 (lake 4)."""
    if name == "table":
        return LAKES_TABLE
    lakes = list(LAKES_TABLE)
    lakes[1] = lakes[1].model_copy(update={"sigma": 0.47})
    lakes[3] = lakes[3].model_copy(update={"sigma": 0.22})
    return tuple(lakes)


def station_deltas(
    truth: GevParams, k: float, cells: list[tuple[str, float]], series_length: int, rng: np.random.Generator
) -> dict[tuple[str, float], float]:
    y = gev_quantile_array(truth.mu, truth.sigma, truth.gamma, uniform_stream(series_length, rng))
    forecast = truth.rescaled(k)
    out = {}
    for name, p in cells:
        rule = rule_at(name, model_threshold(p, truth))
        d = np.asarray(evaluate_score(rule, truth, y), dtype=float) - np.asarray(
            evaluate_score(rule, forecast, y), dtype=float
        )
        out[(name, p)] = float(np.mean(d))
    return out


def ab_laws(lakes: tuple[GevParams, ...], stations: list[int], shape: str) -> tuple[GevParams, GevParams]:
    a, b = (lakes[s - 1] for s in stations)
    if shape == "station":
        return a, b
    gamma = 0.5 * (a.gamma + b.gamma)
    return a.model_copy(update={"gamma": gamma}), b.model_copy(update={"gamma": gamma})


def run_lakes_sim(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    result = ExperimentResult(experiment=cfg.experiment, master_seed=cfg.master_seed)
    lakes = lakes_preset(cfg.lakes_preset)
    cells = score_cells(cfg.score_set, cfg.threshold_p)
    a, b = (s - 1 for s in cfg.ab_stations)
    pair = ab_laws(lakes, cfg.ab_stations, cfg.ab_shape)

    def unit(r: int):
        per_lake = [
            station_deltas(lake, cfg.k, cells, cfg.series_length, unit_rng(cfg.master_seed, r, i))
            for i, lake in enumerate(lakes)
        ]
        if cfg.ab_shape == "station":
            return per_lake, (per_lake[a], per_lake[b])
        # same streams as the per-lake draws, shapes replaced
        ab = tuple(
            station_deltas(law, cfg.k, cells, cfg.series_length, unit_rng(cfg.master_seed, r, i))
            for law, i in zip(pair, (a, b))
        )
        return per_lake, ab

    out = run_units(unit, range(cfg.n_replicates), threads)
    reps = [per_lake for per_lake, _ in out]
    for i, (lake_name, lake) in enumerate(zip(LAKE_NAMES, lakes)):
        result.add_row(
            "lakes", {"station": i + 1, "lake": lake_name, "mu": lake.mu, "sigma": lake.sigma, "gamma": lake.gamma}
        )
    for name, p in cells:
        deltas = np.array([[rep[i][(name, p)] for i in range(len(lakes))] for rep in reps])
        for r in range(deltas.shape[0]):
            for i in range(len(lakes)):
                result.add(name, p, f"station={i + 1}", r, deltas[r, i])
        for i in range(len(lakes)):
            label = f"station={i + 1}"
            result.add_summary(name, p, label, "mean", float(np.mean(deltas[:, i])))
            result.add_summary(name, p, label, "sd", float(np.std(deltas[:, i], ddof=1)) if len(reps) > 1 else 0.0)

        ab = np.array([[d[(name, p)] for d in pair_deltas] for _, pair_deltas in out])
        wins = int(np.sum(ab[:, 0] - ab[:, 1] > 0))
        n = ab.shape[0]
        lo, hi = wilson_interval(wins, n)
        label = f"ab={a + 1}-{b + 1}"
        result.add_summary(name, p, label, "proportion", wins / n)
        result.add_summary(name, p, label, "wilson_low", lo)
        result.add_summary(name, p, label, "wilson_high", hi)
        logger.info(
            "%s p=%s: A/B proportion %.3f over %d replicates (%s shapes)", name, fmt(p), wins / n, n, cfg.ab_shape
        )
    return result
