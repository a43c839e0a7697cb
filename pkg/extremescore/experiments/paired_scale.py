"""
Two-station study: combined score S(k1, k2) = ½(S_1(k1) + S_2(k2)).

Station j has truth GEV(0, sigma_j, gamma) and is forecast by
GEV(0, k_j sigma_j, gamma); the weight threshold is the truth's p-quantile at
each station. The combined score separates, so each station is scored once
per k and the grid is assembled from the two per-station curves.

Both stations are scored on the same uniform stream (common random numbers).
With mu = 0 a station curve is then an exact affine image of the other under
the scale-equivariant scores, so the swCRPS grid is symmetric up to rounding
and the wCRPS curve of station 2 is sigma2 / sigma1 times that of station 1.
"""

from __future__ import annotations

import itertools
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


def station_curve(
    truth: GevParams, name: str, p: float, ks: list[float], n_draws: int, rng: np.random.Generator
) -> dict[float, tuple[float, float]]:
    """{k: (mean score, standard error)} of GEV(mu, k sigma, gamma) on truth draws."""
    y = gev_quantile_array(truth.mu, truth.sigma, truth.gamma, uniform_stream(n_draws, rng))
    rule = rule_at(name, model_threshold(p, truth))
    out = {}
    for k in ks:
        s = np.asarray(evaluate_score(rule, truth.rescaled(k), y), dtype=float)
        out[k] = (float(np.mean(s)), float(np.std(s, ddof=1) / math.sqrt(n_draws)))
    return out


def run_paired_scale(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    result = ExperimentResult(experiment=cfg.experiment, master_seed=cfg.master_seed)
    grid = sorted(set(round(k, 10) for k in cfg.k_grid))
    h = cfg.fd_step
    fd_ks = [round(cfg.fd_point - h, 10), round(cfg.fd_point + h, 10)]
    ks = sorted(set(grid + fd_ks))
    truths = [GevParams(mu=0.0, sigma=s, gamma=cfg.gamma) for s in (cfg.sigma1, cfg.sigma2)]
    cells = score_cells(cfg.score_set, cfg.threshold_p)
    units = [(c, j) for c in range(len(cells)) for j in range(2)]

    def unit(i: int):
        c, j = units[i]
        name, p = cells[c]
        return station_curve(truths[j], name, p, ks, cfg.n_draws, unit_rng(cfg.master_seed, 1))

    curves = run_units(unit, range(len(units)), threads)
    for c, (name, p) in enumerate(cells):
        s1, s2 = curves[2 * c], curves[2 * c + 1]
        for j, curve in enumerate((s1, s2)):
            for k in grid:
                result.add(name, p, f"station={j + 1}/k={fmt(k)}", 0, curve[k][0])

        best, best_val = None, -math.inf
        for k1, k2 in itertools.product(grid, grid):
            val = 0.5 * (s1[k1][0] + s2[k2][0])
            result.add(name, p, f"k1={fmt(k1)}/k2={fmt(k2)}", 0, val)
            if val > best_val:
                best, best_val = (k1, k2), val
        result.add_summary(name, p, "argmax", "k1", best[0])
        result.add_summary(name, p, "argmax", "k2", best[1])
        result.add_summary(name, p, "argmax", "value", best_val)

        # S(k1,k2) - S(k2,k1) = ½[(S_1(k1) - S_2(k1)) - (S_1(k2) - S_2(k2))]
        asym = max(
            abs(0.5 * ((s1[a][0] - s2[a][0]) - (s1[b][0] - s2[b][0])))
            for a, b in itertools.product(grid, grid)
        )
        pooled_se = 0.5 * math.sqrt(
            max(s1[k][1] ** 2 for k in grid) + max(s2[k][1] ** 2 for k in grid)
        ) * math.sqrt(2.0)
        result.add_summary(name, p, "symmetry", "max_abs_diff", asym)
        result.add_summary(name, p, "symmetry", "pooled_se", pooled_se)

        lo, hi = fd_ks
        d1 = 0.5 * (s1[hi][0] - s1[lo][0]) / (hi - lo)
        d2 = 0.5 * (s2[hi][0] - s2[lo][0]) / (hi - lo)
        result.add_summary(name, p, f"grad@{fmt(cfg.fd_point)}", "dS_dk1", d1)
        result.add_summary(name, p, f"grad@{fmt(cfg.fd_point)}", "dS_dk2", d2)
        logger.info("%s p=%s: argmax k=(%s, %s), asymmetry %.3g", name, fmt(p), fmt(best[0]), fmt(best[1]), asym)
    return result
