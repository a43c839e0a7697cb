"""Shared pieces of the experiment drivers."""

from __future__ import annotations

import math

import numpy as np

from extremescore.distributions import GevParams, gev_quantile
from extremescore.rules import ScoreRule

UNWEIGHTED = -math.inf
THRESHOLDED = ("LSq", "wCRPS", "swCRPS")


def is_unweighted(p: float) -> bool:
    return p == UNWEIGHTED


def model_threshold(p: float, law: GevParams) -> float:
    """q(p) under a GEV law; p = -inf maps to the lower end point (finite when gamma > 0)."""
    if is_unweighted(p):
        return law.lower
    if p == 0.0:
        return law.lower
    return float(gev_quantile(law, p))


def empirical_threshold(p: float, values) -> float:
    if is_unweighted(p):
        return -math.inf
    return float(np.quantile(np.asarray(values, dtype=float), p))


def score_cells(score_set: list[str], probs: list[float]) -> list[tuple[str, float]]:
    """(score, p) pairs: threshold-free scores once at p = -inf, the others at every p."""
    cells: list[tuple[str, float]] = []
    for name in score_set:
        if name in THRESHOLDED:
            cells.extend((name, float(p)) for p in probs)
        else:
            cells.append((name, UNWEIGHTED))
    return cells


def rule_at(name: str, q: float) -> ScoreRule:
    """Rule for `name` with absolute threshold q (-inf: the unweighted version)."""
    return ScoreRule.named(name, None if q == -math.inf else q)


def fmt(x: float) -> str:
    return f"{x:g}"
