"""
Named scoring rules and one entry point to evaluate them on any forecast.

Usage:
    from extremescore.rules import ScoreRule, evaluate_score

    rule = ScoreRule.swcrps(q=2.0)
    evaluate_score(rule, GevParams(mu=0, sigma=1, gamma=0.12), [1.0, 2.5])

Forecasts with a closed form (GEV, PGEV, benchmark laws) are scored exactly.
Ensembles use the fair kernel estimators. Conditional laws and benchmark laws
under a weight are scored through a deterministic quantile-grid ensemble.
`gev_score_array` scores per-observation GEV parameters in one pass.
"""

from __future__ import annotations

import math
from functools import singledispatch
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from extremescore.distributions import (
    BenchmarkForecast,
    Ensemble,
    GevParams,
    PgevParams,
    TruncatedGev,
    gev_logpdf_array,
    gev_neglog_cdf_array,
    pgev_to_gev,
)
from extremescore.errors import DegenerateWeightError, DomainError
from extremescore.kernel_mc import ensemble_scores, quantile_grid_ensemble
from extremescore.scoring_closed import (
    censored_ls,
    crps_benchmark,
    gev_kernel_terms,
    log_score,
    scrps_benchmark,
)
from extremescore.weights import WeightSpec

ScoreName = Literal["LS", "LSq", "CRPS", "SCRPS", "wCRPS", "swCRPS"]

KERNEL_SCORES = ("CRPS", "SCRPS", "wCRPS", "swCRPS")
SCALED_SCORES = ("SCRPS", "swCRPS")


class ScoreRule(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: ScoreName
    weight: WeightSpec = WeightSpec()
    q: float | None = None  # censoring level of LSq

    # --- constructors -----------------------------------------------------
    @classmethod
    def ls(cls) -> "ScoreRule":
        return cls(name="LS")

    @classmethod
    def lsq(cls, q: float) -> "ScoreRule":
        return cls(name="LSq", q=float(q))

    @classmethod
    def crps(cls) -> "ScoreRule":
        return cls(name="CRPS")

    @classmethod
    def scrps(cls) -> "ScoreRule":
        return cls(name="SCRPS")

    @classmethod
    def wcrps(cls, q: float | None = None, weight: WeightSpec | None = None) -> "ScoreRule":
        return cls(name="wCRPS", weight=_weight_from(q, weight))

    @classmethod
    def swcrps(cls, q: float | None = None, weight: WeightSpec | None = None) -> "ScoreRule":
        return cls(name="swCRPS", weight=_weight_from(q, weight))

    @classmethod
    def named(cls, name: str, q: float | None = None) -> "ScoreRule":
        """Build a rule from its name and an absolute threshold (None or -inf: unweighted)."""
        if q is not None and math.isinf(q) and q < 0:
            q = None
        if name == "LS":
            return cls.ls()
        if name == "LSq":
            return cls.ls() if q is None else cls.lsq(q)
        if name == "CRPS":
            return cls.crps()
        if name == "SCRPS":
            return cls.scrps()
        if name == "wCRPS":
            return cls.crps() if q is None else cls.wcrps(q)
        if name == "swCRPS":
            return cls.scrps() if q is None else cls.swcrps(q)
        raise DomainError(f"unknown score '{name}'")

    @property
    def is_kernel(self) -> bool:
        return self.name in KERNEL_SCORES

    @property
    def is_scaled(self) -> bool:
        return self.name in SCALED_SCORES

    def __call__(self, forecast, y):
        return evaluate_score(self, forecast, y)


def _weight_from(q: float | None, weight: WeightSpec | None) -> WeightSpec:
    if weight is not None:
        return weight
    if q is None:
        return WeightSpec.unweighted()
    return WeightSpec.quantile(q)


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


# ---------------------------------------------------------------------------
# Per-observation GEV scoring
# ---------------------------------------------------------------------------
def gev_score_array(rule: ScoreRule, mu, sigma, gamma, y):
    """Score y_i under GEV(mu_i, sigma_i, gamma_i) elementwise."""
    if rule.name == "LS":
        return _out(gev_logpdf_array(mu, sigma, gamma, y))
    if rule.name == "LSq":
        y = np.asarray(y, dtype=float)
        log_fq = -gev_neglog_cdf_array(mu, sigma, gamma, rule.q)
        return _out(np.where(y <= rule.q, log_fq, gev_logpdf_array(mu, sigma, gamma, y)))

    weight = rule.weight if rule.name in ("wCRPS", "swCRPS") else WeightSpec.unweighted()
    wcrps = ew = ey = 0.0
    for coef, part in weight.components():
        q = -math.inf if part.kind == "unweighted" else part.q
        w_i, e_i, y_i = gev_kernel_terms(mu, sigma, gamma, q, y)
        wcrps = wcrps + coef * np.asarray(w_i)
        ew = ew + coef * np.asarray(e_i)
        ey = ey + coef * np.asarray(y_i)
    if not rule.is_scaled:
        return _out(wcrps)
    if np.any(ew <= 0):
        raise DegenerateWeightError(f"{rule.name}: E|W(X) - W(X')| vanishes for some forecasts")
    return _out(-ey / ew - 0.5 * np.log(ew))


# ---------------------------------------------------------------------------
# Dispatch over forecast types
# ---------------------------------------------------------------------------
@singledispatch
def _score(forecast, rule: ScoreRule, y):
    raise TypeError(f"cannot score forecast of type {type(forecast).__name__}")


@_score.register
def _(forecast: GevParams, rule: ScoreRule, y):
    return gev_score_array(rule, forecast.mu, forecast.sigma, forecast.gamma, y)


@_score.register
def _(forecast: PgevParams, rule: ScoreRule, y):
    return _score(pgev_to_gev(forecast), rule, y)


def _kernel_on_ensemble(ens: Ensemble, rule: ScoreRule, y, fair: bool):
    weight = rule.weight if rule.name in ("wCRPS", "swCRPS") else WeightSpec.unweighted()
    return _out(ensemble_scores(ens.as_array(), weight, y, scaled=rule.is_scaled, fair=fair))


@_score.register
def _(forecast: Ensemble, rule: ScoreRule, y):
    if not rule.is_kernel:
        raise DomainError(f"{rule.name} needs a density; ensembles only support kernel scores")
    return _kernel_on_ensemble(forecast, rule, y, fair=True)


@_score.register
def _(forecast: TruncatedGev, rule: ScoreRule, y):
    if rule.name == "LS":
        return log_score(forecast, y)
    if rule.name == "LSq":
        return censored_ls(forecast, rule.q, y)
    return _kernel_on_ensemble(quantile_grid_ensemble(forecast), rule, y, fair=False)


@_score.register
def _(forecast: BenchmarkForecast, rule: ScoreRule, y):
    if rule.name == "LS":
        return log_score(forecast, y)
    if rule.name == "LSq":
        return censored_ls(forecast, rule.q, y)
    if rule.name == "CRPS":
        return crps_benchmark(forecast, y)
    if rule.name == "SCRPS":
        return scrps_benchmark(forecast, y)
    return _kernel_on_ensemble(quantile_grid_ensemble(forecast), rule, y, fair=False)


def evaluate_score(rule: ScoreRule, forecast, y):
    """Score observation(s) y under forecast; higher is better."""
    return _score(forecast, rule, y)
