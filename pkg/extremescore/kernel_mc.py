"""
Sample-based kernel scores and scale-function estimates.

Usage:
    from extremescore.kernel_mc import mc_kernel_estimate
    est = mc_kernel_estimate(sample, WeightSpec.quantile(2.0), y=2.5)
    est.value, est.std_err

Kernel estimators work on the W-transformed sample. W is nondecreasing, so
sorting W(x) and keeping prefix sums gives every pairwise sum in O(m log m):

    S = Σ_{i<j} (W_(j) - W_(i)) = Σ_j W_(j) (2j - (m - 1)),   j = 0..m-1
    fair:    E_pp = 2S / (m(m - 1))
    plug-in: E_pp = 2S / m^2

Scale-function estimates measure second-order expected-score loss under a (location, scale)
perturbation of the truth, optionally conditioned on exceeding u. The score
argument is any callable `score(forecast, y_array) -> array`; ScoreRule
instances qualify.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from extremescore.distributions import (
    Ensemble,
    Forecast,
    GevParams,
    TruncatedGev,
    forecast_transform,
    gev_cdf,
    gev_quantile_array,
    uniform_stream,
)
from extremescore.errors import DegenerateSampleError, DomainError, SampleTooSmallError
from extremescore.weights import WeightSpec

logger = logging.getLogger(__name__)

DEFAULT_T_GRID = (-0.06, -0.04, -0.02, 0.02, 0.04, 0.06)
GRID_ENSEMBLE_SIZE = 2000

ScoreFn = Callable[[Forecast, np.ndarray], np.ndarray]


class KernelEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    std_err: float = Field(ge=0)
    e_pair: float
    e_obs: float


class PerturbationSpec(BaseModel):
    """Direction r in (location, scale) space, magnitude t, around base θ = (mu, sigma)."""

    model_config = ConfigDict(frozen=True)

    direction: tuple[float, float]
    magnitude: float
    base: GevParams

    @field_validator("direction")
    @classmethod
    def _unit(cls, v: tuple[float, float]) -> tuple[float, float]:
        if abs(math.hypot(*v) - 1.0) > 1e-9:
            raise ValueError(f"direction must be a unit vector, got {v}")
        return v

    def perturbed(self) -> GevParams:
        r1, r2 = self.direction
        b = self.base
        sigma = b.sigma * (1.0 + self.magnitude * r2)
        if sigma <= 0:
            raise DomainError(f"perturbation t={self.magnitude} makes the scale nonpositive")
        return GevParams(mu=b.mu + self.magnitude * b.sigma * r1, sigma=sigma, gamma=b.gamma)


class ScaleFunctionEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    std_err: float = Field(ge=0)
    u: float | None = None
    linear_coef: float = 0.0


# ---------------------------------------------------------------------------
# Sorted-W building blocks
# ---------------------------------------------------------------------------
def _pair_sum(w_sorted: np.ndarray) -> float:
    m = w_sorted.size
    j = np.arange(m, dtype=float)
    return float(np.dot(w_sorted, 2.0 * j - (m - 1)))


def _abs_dist_to_points(w_sorted: np.ndarray, points) -> np.ndarray:
    """Σ_i |W_i - p| for each p, via searchsorted on the sorted W."""
    points = np.asarray(points, dtype=float)
    m = w_sorted.size
    prefix = np.concatenate(([0.0], np.cumsum(w_sorted)))
    k = np.searchsorted(w_sorted, points, side="left")
    below = points * k - prefix[k]
    above = (prefix[m] - prefix[k]) - points * (m - k)
    return below + above


def ensemble_kernel_terms(w_sorted: np.ndarray, w_obs, fair: bool = True):
    """(E_pp, E_py) for a sorted W-sample and one or more W(y)."""
    m = w_sorted.size
    s = _pair_sum(w_sorted)
    e_pair = 2.0 * s / (m * (m - 1)) if fair else 2.0 * s / m**2
    e_obs = _abs_dist_to_points(w_sorted, w_obs) / m
    return e_pair, e_obs


def _transformed(sample, weight: WeightSpec) -> np.ndarray:
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise SampleTooSmallError(f"kernel estimators need at least 2 members, got {x.size}")
    return np.sort(weight.chain(x))


# ---------------------------------------------------------------------------
# Kernel estimators
# ---------------------------------------------------------------------------
def mc_kernel_estimate(sample, weight: WeightSpec, y: float, fair: bool = True) -> KernelEstimate:
    """½ E|W(X) - W(X')| - E|W(X) - W(y)| with a projection standard error."""
    w = _transformed(sample, weight)
    m = w.size
    w_y = float(weight.chain(y))
    e_pair, e_obs = ensemble_kernel_terms(w, w_y, fair)
    e_obs = float(e_obs)

    d_i = _abs_dist_to_points(w, w) / (m - 1)
    a_i = np.abs(w - w_y)
    infl = d_i - a_i
    se = float(np.std(infl, ddof=1) / math.sqrt(m))
    return KernelEstimate(value=0.5 * e_pair - e_obs, std_err=se, e_pair=e_pair, e_obs=e_obs)


def mc_kernel_score(sample, weight: WeightSpec, y: float, fair: bool = True) -> float:
    return mc_kernel_estimate(sample, weight, y, fair).value


def mc_scaled_kernel_estimate(
    sample, weight: WeightSpec, y: float, fair: bool = True
) -> KernelEstimate:
    """-E_py/E_pp - ½ log E_pp, with a delta-method standard error."""
    w = _transformed(sample, weight)
    m = w.size
    w_y = float(weight.chain(y))
    e_pair, e_obs = ensemble_kernel_terms(w, w_y, fair)
    e_obs = float(e_obs)
    if not e_pair > 0:
        raise DegenerateSampleError("all W(x_i) are equal; the scaled score is undefined")

    d_i = _abs_dist_to_points(w, w) / (m - 1)
    a_i = np.abs(w - w_y)
    grad_pair = e_obs / e_pair**2 - 0.5 / e_pair
    infl = -a_i / e_pair + grad_pair * 2.0 * d_i
    se = float(np.std(infl, ddof=1) / math.sqrt(m))
    value = -e_obs / e_pair - 0.5 * math.log(e_pair)
    return KernelEstimate(value=value, std_err=se, e_pair=e_pair, e_obs=e_obs)


def mc_scaled_kernel_score(sample, weight: WeightSpec, y: float, fair: bool = True) -> float:
    return mc_scaled_kernel_estimate(sample, weight, y, fair).value


def ensemble_scores(sample, weight: WeightSpec, y, scaled: bool, fair: bool = True):
    """Kernel (or scaled kernel) score of one sample against many observations."""
    w = _transformed(sample, weight)
    e_pair, e_obs = ensemble_kernel_terms(w, weight.chain(np.asarray(y, dtype=float)), fair)
    if not scaled:
        return 0.5 * e_pair - e_obs
    if not e_pair > 0:
        raise DegenerateSampleError("all W(x_i) are equal; the scaled score is undefined")
    return -e_obs / e_pair - 0.5 * math.log(e_pair)


def quantile_grid_ensemble(f: Forecast, m: int = GRID_ENSEMBLE_SIZE) -> Ensemble:
    """Deterministic m-point ensemble at the mid-grid probabilities (i + ½)/m."""
    grid = (np.arange(m, dtype=float) + 0.5) / m
    return Ensemble(members=tuple(np.asarray(forecast_transform(f, grid), dtype=float)))


# ---------------------------------------------------------------------------
# Conditional scores and scale-function estimates
# ---------------------------------------------------------------------------
def _truth_draws(truth: GevParams, u: float | None, n: int, rng: np.random.Generator):
    v = uniform_stream(n, rng)
    if u is None:
        return gev_quantile_array(truth.mu, truth.sigma, truth.gamma, v)
    cond = TruncatedGev.above(truth, u)
    f_u = gev_cdf(cond.base, u)
    return gev_quantile_array(truth.mu, truth.sigma, truth.gamma, f_u + (1.0 - f_u) * v)


def _law(p: GevParams, u: float | None) -> Forecast:
    return p if u is None else TruncatedGev.above(p, u)


def conditional_expected_score(
    score: ScoreFn,
    forecast: GevParams,
    truth: GevParams,
    u: float,
    n: int,
    seed,
) -> tuple[float, float]:
    """MC estimate of E_Q[S(P^u, Y) | Y > u] with its standard error."""
    if n < 100:
        raise DomainError(f"conditional_expected_score needs n >= 100, got {n}")
    rng = np.random.default_rng(seed)
    y = _truth_draws(truth, u, n, rng)
    vals = np.asarray(score(_law(forecast, u), y), dtype=float)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n))


def scale_function_estimate(
    score: ScoreFn,
    base: GevParams,
    r: tuple[float, float],
    u: float | None = None,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    n: int = 100_000,
    seed=0,
) -> ScaleFunctionEstimate:
    """Fit D(t) = S_u(Q, Q) - S_u(Q_{θ + tσr}, Q) ≈ c t² on common random numbers.

    Returns c, the directional (tail-)scale function times σ², with a standard
    error from the per-draw coefficients and the fitted linear coefficient of
    D(t) = b t + c t² as a properness diagnostic.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.max(np.abs(t)) > 0.1:
        raise DomainError("t_grid must be nonempty with max |t| <= 0.1")
    rng = np.random.default_rng(seed)
    y = _truth_draws(base, u, n, rng)

    s_true = np.asarray(score(_law(base, u), y), dtype=float)
    diffs = np.empty((t.size, n))
    for k, tk in enumerate(t):
        pert = PerturbationSpec(direction=r, magnitude=float(tk), base=base).perturbed()
        diffs[k] = s_true - np.asarray(score(_law(pert, u), y), dtype=float)

    t2 = t**2
    per_draw = t2 @ diffs / np.sum(t2**2)
    value = float(np.mean(per_draw))
    se = float(np.std(per_draw, ddof=1) / math.sqrt(n))

    design = np.column_stack([t, t2])
    (lin, _), *_ = np.linalg.lstsq(design, diffs.mean(axis=1), rcond=None)
    logger.debug("scale function sigma=%s u=%s: c=%.6g (se %.2g), linear=%.3g", base.sigma, u, value, se, lin)
    return ScaleFunctionEstimate(value=value, std_err=se, u=u, linear_coef=float(lin))
