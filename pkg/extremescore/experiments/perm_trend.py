"""
Permutation diagnostic for a trend model.

Usage:
    uv run extremescore perm-trend --config configs/perm.env --out out/perm

The trend model is fitted to the data as observed and again after shuffling
each station's covariate values among its own years. Both sets of per-station
mean scores are sorted and paired rank by rank; with a real trend the
original pairing scores better, so most pairs sit above the diagonal.
"""

from __future__ import annotations

import logging

import numpy as np

from extremescore.config import ExperimentConfig
from extremescore.errors import ConfigError, CovariateMissingError, InsufficientDataError
from extremescore.experiments.common import score_cells
from extremescore.experiments.station_eval import (
    fit_families,
    optimizer_config,
    station_score_table,
    usable_stations,
)
from extremescore.results import ExperimentResult
from extremescore.seeding import unit_rng
from extremescore.series import StationSeries

logger = logging.getLogger(__name__)


def permute_covariates(stations: list[StationSeries], master_seed: int, b: int) -> list[StationSeries]:
    return [s.with_covariate(unit_rng(master_seed, 3, b, i).permutation(s.t)) for i, s in enumerate(stations)]


def fraction_above(original: np.ndarray, permuted: np.ndarray) -> float:
    """Share of sorted pairs with original > permuted; ties count one half."""
    a, b = np.sort(original), np.sort(permuted)
    return float(np.mean((a > b) + 0.5 * (a == b)))


def run_permutation_trend(
    data: list[StationSeries], cfg: ExperimentConfig, threads: int = 1, dropped_rows: int = 0
) -> ExperimentResult:
    if cfg.model not in ("gev_mu", "pgev_lambda"):
        raise ConfigError(f"permutation diagnostic needs a trend model, got {cfg.model}")
    result = ExperimentResult(experiment=cfg.experiment, master_seed=cfg.master_seed, dropped_rows=dropped_rows)
    stations = usable_stations(data, cfg.min_years, result)
    if not stations:
        raise InsufficientDataError(f"no station has at least {cfg.min_years} usable years")
    if any(s.covariate is None for s in stations):
        raise CovariateMissingError("the permutation diagnostic needs a covariate for every station")

    opt = optimizer_config(cfg, threads)
    cells = score_cells(cfg.score_set, cfg.threshold_p)
    fam = cfg.model

    def scores_for(data_set: list[StationSeries]):
        fits = fit_families(data_set, (fam,), opt, cfg.master_seed)
        return {cell: by_fam[fam] for cell, by_fam in station_score_table(data_set, fits, cells).items()}

    original = scores_for(stations)
    for (name, p), vals in original.items():
        for k, v in enumerate(np.sort(vals)):
            result.add(name, p, f"original/rank={k:04d}", 0, v)

    for b in range(cfg.n_permutations):
        permuted = scores_for(permute_covariates(stations, cfg.master_seed, b))
        for (name, p), vals in permuted.items():
            orig = original[(name, p)]
            keep = np.isfinite(orig) & np.isfinite(vals)
            for k, v in enumerate(np.sort(vals)):
                result.add(name, p, f"permuted/rank={k:04d}", b, v)
            frac = fraction_above(orig[keep], vals[keep])
            result.add_summary(name, p, f"permutation={b}", "frac_above", frac)
            logger.info("%s p=%g permutation %d: %.3f of sorted pairs above the diagonal", name, p, b, frac)

    for name, p in cells:
        fracs = [result.stat(name, p, f"permutation={b}", "frac_above") for b in range(cfg.n_permutations)]
        result.add_summary(name, p, "all", "frac_above", float(np.mean(fracs)))
    return result
