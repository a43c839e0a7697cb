"""
Maximum-likelihood fitting of the four station models.

Usage:
    from extremescore.inference import ModelSpec, fit_mle

    fit = fit_mle(ModelSpec(family="gev"), series, seed=7)
    fit.params, fit.std_errs

Families:
    gumbel       GEV(mu, sigma, 0)
    gev          GEV(mu, sigma, gamma)
    gev_mu       GEV(mu0 + mu1 t, sigma, gamma), t the covariate
    pgev_lambda  PGEV(exp(lambda0 + lambda1 t), sigma_u, gamma, u),
                 u fixed per station at the empirical 75% quantile

The optimizer is Nelder-Mead on (log sigma, gamma clamped to (-0.99, 0.99),
everything else as is), started from Gumbel moments and restarted from
jittered copies of the best point. Observations outside the implied support
make the objective +inf so the simplex backs away.

Several stations fitted with one regional shape use a profile likelihood:
a bounded scalar search over gamma with per-station Nelder-Mead fits inside.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize, stats

from extremescore.distributions import (
    gev_logpdf_array,
    gev_neglog_cdf_array,
    pgev_to_gev_array,
)
from extremescore.errors import (
    CovariateMissingError,
    DomainError,
    InsufficientDataError,
    MissingStdErrError,
    SingularHessianError,
)
from extremescore.seeding import run_units, unit_rng
from extremescore.series import StationSeries

logger = logging.getLogger(__name__)

Family = Literal["gumbel", "gev", "gev_mu", "pgev_lambda"]

PARAM_NAMES: dict[str, tuple[str, ...]] = {
    "gumbel": ("mu", "sigma"),
    "gev": ("mu", "sigma", "gamma"),
    "gev_mu": ("mu0", "mu1", "sigma", "gamma"),
    "pgev_lambda": ("lambda0", "lambda1", "sigma_u", "gamma"),
}
TREND_PARAM = {"gev_mu": "mu1", "pgev_lambda": "lambda1"}
SCALE_NAMES = ("sigma", "sigma_u")
SHAPE_CLAMP = 0.99
PGEV_REFERENCE_PROB = 0.75


class ModelSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Family

    @property
    def covariate_required(self) -> bool:
        return self.family in TREND_PARAM

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.family]

    @property
    def has_shape(self) -> bool:
        return self.family != "gumbel"

    @property
    def trend_param(self) -> str | None:
        return TREND_PARAM.get(self.family)


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_restarts: int = Field(default=5, ge=0)
    jitter: float = Field(default=0.1, ge=0)
    xatol: float = Field(default=1e-7, gt=0)
    fatol: float = Field(default=1e-9, gt=0)
    max_iter_per_param: int = Field(default=1000, ge=10)
    min_obs: int = Field(default=20, ge=2)
    shape_bounds: tuple[float, float] = (-0.95, 0.95)
    compute_std_errs: bool = True
    threads: int = Field(default=1, ge=1)


class FitResult(BaseModel):
    family: Family
    station_id: str | None = None
    params: dict[str, float]
    std_errs: dict[str, float] | None = None
    neg_loglik: float
    converged: bool
    n_restarts_used: int = 0
    u: float | None = None  # PGEV reference level
    history: list[float] = []  # best objective after each start


class RegionalFit(BaseModel):
    family: Family
    gamma: float | None
    gamma_std_err: float | None = None
    stations: list[FitResult]
    neg_loglik: float
    converged: bool


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------
def pgev_reference_level(series: StationSeries) -> float:
    return float(np.quantile(series.y, PGEV_REFERENCE_PROB))


def _covariate(spec: ModelSpec, series: StationSeries) -> np.ndarray | None:
    if not spec.covariate_required:
        return None
    if series.covariate is None:
        raise CovariateMissingError(
            f"model {spec.family} needs a covariate but station {series.station_id} has none"
        )
    return series.t


def resolve_gev(spec: ModelSpec, params: dict[str, float], series: StationSeries):
    """Per-observation (mu, sigma, gamma) arrays implied by params on this series."""
    n = len(series)
    t = _covariate(spec, series)
    fam = spec.family
    if fam == "gumbel":
        return np.full(n, params["mu"]), np.full(n, params["sigma"]), np.zeros(n)
    gamma = np.full(n, params["gamma"])
    if fam == "gev":
        return np.full(n, params["mu"]), np.full(n, params["sigma"]), gamma
    if fam == "gev_mu":
        return params["mu0"] + params["mu1"] * t, np.full(n, params["sigma"]), gamma
    lam = np.exp(params["lambda0"] + params["lambda1"] * t)
    mu, sigma = pgev_to_gev_array(lam, params["sigma_u"], gamma, pgev_reference_level(series))
    return mu, sigma, gamma


def _station_negloglik(spec: ModelSpec, params: dict[str, float], series: StationSeries) -> float:
    scale = params["sigma_u" if spec.family == "pgev_lambda" else "sigma"]
    if not scale > 0:
        return math.inf
    mu, sigma, gamma = resolve_gev(spec, params, series)
    lp = gev_logpdf_array(mu, sigma, gamma, series.y)
    total = float(np.sum(lp))
    return -total if math.isfinite(total) else math.inf


def station_key(name: str, station_id: str) -> str:
    return f"{name}@{station_id}"


def model_negloglik(
    spec: ModelSpec,
    params: dict[str, float],
    data: StationSeries | Sequence[StationSeries],
    shared_shape: bool = False,
) -> float:
    """-Σ log f(y); +inf when any observation is outside the implied support.

    For several stations, per-station parameters are keyed `name@station_id`;
    with shared_shape the single key `gamma` is used by every station.
    """
    if isinstance(data, StationSeries):
        return _station_negloglik(spec, params, data)
    total = 0.0
    for s in data:
        local = {}
        for name in spec.param_names:
            if name == "gamma" and shared_shape:
                local[name] = params["gamma"]
            else:
                local[name] = params[station_key(name, s.station_id)]
        total += _station_negloglik(spec, local, s)
        if not math.isfinite(total):
            return math.inf
    return total


# ---------------------------------------------------------------------------
# Parameter transforms and starting values
# ---------------------------------------------------------------------------
def _encode(names: Sequence[str], params: dict[str, float]) -> np.ndarray:
    return np.array([math.log(params[k]) if k in SCALE_NAMES else params[k] for k in names])


def _decode(names: Sequence[str], theta: np.ndarray) -> dict[str, float]:
    out = {}
    for k, v in zip(names, theta):
        if k in SCALE_NAMES:
            out[k] = math.exp(min(v, 700.0))
        elif k == "gamma":
            out[k] = float(np.clip(v, -SHAPE_CLAMP, SHAPE_CLAMP))
        else:
            out[k] = float(v)
    return out


def moment_start(spec: ModelSpec, series: StationSeries, gamma: float = 0.1) -> dict[str, float]:
    """Gumbel moment estimates, shape 0.1, trends 0."""
    y = series.y
    sigma = math.sqrt(6.0) * float(np.std(y, ddof=1)) / math.pi
    mu = float(np.mean(y)) - np.euler_gamma * sigma
    fam = spec.family
    if fam == "gumbel":
        return {"mu": mu, "sigma": sigma}
    if fam == "gev":
        return {"mu": mu, "sigma": sigma, "gamma": gamma}
    if fam == "gev_mu":
        return {"mu0": mu, "mu1": 0.0, "sigma": sigma, "gamma": gamma}
    u = pgev_reference_level(series)
    lam = float(gev_neglog_cdf_array(mu, sigma, gamma, u))
    sigma_u = sigma + gamma * (u - mu)
    if not (lam > 0 and math.isfinite(lam) and sigma_u > 0):
        lam, sigma_u = 1.0, sigma
    return {"lambda0": math.log(lam), "lambda1": 0.0, "sigma_u": sigma_u, "gamma": gamma}


def _jittered(params: dict[str, float], jitter: float, rng: np.random.Generator) -> dict[str, float]:
    out = {}
    for k, v in params.items():
        step = jitter * max(abs(v), 0.1) * rng.standard_normal()
        out[k] = v + step
        if k in SCALE_NAMES:
            out[k] = abs(out[k]) or v
        if k == "gamma":
            out[k] = float(np.clip(out[k], -SHAPE_CLAMP, SHAPE_CLAMP))
    return out


def _check_series(spec: ModelSpec, series: StationSeries, cfg: OptimizerConfig) -> None:
    if len(series) < cfg.min_obs:
        raise InsufficientDataError(
            f"station {series.station_id}: {len(series)} observations, need {cfg.min_obs}"
        )
    if float(np.std(series.y)) == 0.0:
        raise InsufficientDataError(f"station {series.station_id}: series is constant")
    _covariate(spec, series)


# ---------------------------------------------------------------------------
# Single-station fits
# ---------------------------------------------------------------------------
def _nelder_mead(objective, names: Sequence[str], start: dict[str, float], cfg: OptimizerConfig):
    theta0 = _encode(names, start)
    res = optimize.minimize(
        lambda th: objective(_decode(names, th)),
        theta0,
        method="Nelder-Mead",
        options={
            "xatol": cfg.xatol,
            "fatol": cfg.fatol,
            "maxiter": cfg.max_iter_per_param * len(names),
            "maxfev": 2 * cfg.max_iter_per_param * len(names),
            "adaptive": len(names) > 2,
        },
    )
    return _decode(names, res.x), float(res.fun), bool(res.success)


def _best_of_restarts(objective, names, start, cfg: OptimizerConfig, rng: np.random.Generator):
    if not math.isfinite(objective(start)) and "gamma" in start:
        start = {**start, "gamma": 0.0}
    best, best_val, best_ok = _nelder_mead(objective, names, start, cfg)
    history = [best_val]
    for k in range(cfg.n_restarts):
        cand_start = _jittered(best, cfg.jitter, rng)
        cand, val, ok = _nelder_mead(objective, names, cand_start, cfg)
        logger.debug("restart %d: nll %.6f (best %.6f)", k + 1, val, best_val)
        if val < best_val:
            best, best_val, best_ok = cand, val, ok
        history.append(best_val)
    return best, best_val, best_ok, history


def fit_station(
    spec: ModelSpec,
    series: StationSeries,
    cfg: OptimizerConfig | None = None,
    seed=0,
    fixed_gamma: float | None = None,
) -> FitResult:
    cfg = cfg or OptimizerConfig()
    _check_series(spec, series, cfg)
    rng = np.random.default_rng(seed)
    names = [k for k in spec.param_names if not (k == "gamma" and fixed_gamma is not None)]
    start = moment_start(spec, series, gamma=0.1 if fixed_gamma is None else fixed_gamma)
    start = {k: start[k] for k in names}

    def objective(p: dict[str, float]) -> float:
        full = p if fixed_gamma is None else {**p, "gamma": fixed_gamma}
        return _station_negloglik(spec, full, series)

    best, val, ok, history = _best_of_restarts(objective, names, start, cfg, rng)
    params = best if fixed_gamma is None else {**best, "gamma": fixed_gamma}
    params = {k: params[k] for k in spec.param_names}
    fit = FitResult(
        family=spec.family,
        station_id=series.station_id,
        params=params,
        neg_loglik=val,
        converged=ok and math.isfinite(val),
        n_restarts_used=len(history),
        u=pgev_reference_level(series) if spec.family == "pgev_lambda" else None,
        history=history,
    )
    if cfg.compute_std_errs and fit.converged:
        free = None if fixed_gamma is None else tuple(names)
        try:
            fit = fit.model_copy(update={"std_errs": standard_errors(spec, fit, series, free=free)})
        except SingularHessianError as e:
            logger.warning("station %s (%s): %s; standard errors omitted", series.station_id, spec.family, e)
    return fit


# ---------------------------------------------------------------------------
# Regional fits with a shared shape
# ---------------------------------------------------------------------------
def fit_regional(
    spec: ModelSpec,
    data: Sequence[StationSeries],
    cfg: OptimizerConfig | None = None,
    seed=0,
) -> RegionalFit:
    cfg = cfg or OptimizerConfig()
    data = list(data)
    for s in data:
        _check_series(spec, s, cfg)

    if not spec.has_shape:
        fits = run_units(
            lambda i: fit_station(spec, data[i], cfg, seed=[seed, i]), range(len(data)), cfg.threads
        )
        return RegionalFit(
            family=spec.family,
            gamma=None,
            stations=fits,
            neg_loglik=sum(f.neg_loglik for f in fits),
            converged=all(f.converged for f in fits),
        )

    inner = cfg.model_copy(update={"n_restarts": 0, "compute_std_errs": False})

    def profile(gamma: float) -> float:
        fits = run_units(
            lambda i: fit_station(spec, data[i], inner, seed=[seed, i], fixed_gamma=gamma),
            range(len(data)),
            cfg.threads,
        )
        total = sum(f.neg_loglik for f in fits)
        logger.debug("profile gamma=%.5f: nll %.6f", gamma, total)
        return total

    lo, hi = cfg.shape_bounds
    res = optimize.minimize_scalar(profile, bounds=(lo, hi), method="bounded", options={"xatol": 1e-5})
    gamma_hat = float(res.x)
    logger.info("[%s] regional shape %.4f over %d stations", spec.family, gamma_hat, len(data))

    fits = run_units(
        lambda i: fit_station(spec, data[i], cfg, seed=[seed, i], fixed_gamma=gamma_hat),
        range(len(data)),
        cfg.threads,
    )
    total = sum(f.neg_loglik for f in fits)

    gamma_se = None
    if cfg.compute_std_errs:
        h = max(1e-4 * abs(gamma_hat), 1e-3)
        curv = (profile(gamma_hat + h) - 2.0 * total + profile(gamma_hat - h)) / h**2
        gamma_se = 1.0 / math.sqrt(curv) if curv > 0 else None

    return RegionalFit(
        family=spec.family,
        gamma=gamma_hat,
        gamma_std_err=gamma_se,
        stations=fits,
        neg_loglik=total,
        converged=bool(res.success) and all(f.converged for f in fits),
    )


def fit_mle(
    spec: ModelSpec,
    data: StationSeries | Sequence[StationSeries],
    shared_shape: bool = False,
    optimizer_config: OptimizerConfig | None = None,
    seed=0,
) -> FitResult | RegionalFit:
    """Fit one series, or several (independently, or with a shared shape)."""
    if isinstance(data, StationSeries):
        return fit_station(spec, data, optimizer_config, seed)
    if shared_shape:
        return fit_regional(spec, data, optimizer_config, seed)
    cfg = optimizer_config or OptimizerConfig()
    data = list(data)
    fits = run_units(lambda i: fit_station(spec, data[i], cfg, seed=[seed, i]), range(len(data)), cfg.threads)
    return RegionalFit(
        family=spec.family,
        gamma=None,
        stations=fits,
        neg_loglik=sum(f.neg_loglik for f in fits),
        converged=all(f.converged for f in fits),
    )


# ---------------------------------------------------------------------------
# Standard errors and trend tests
# ---------------------------------------------------------------------------
def numerical_hessian(func, x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian with steps max(1e-4 |x_i|, 1e-6)."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = np.maximum(1e-4 * np.abs(x), 1e-6)
    f0 = func(x)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (func(x + ei) - 2.0 * f0 + func(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            val = (
                func(x + ei + ej) - func(x + ei - ej) - func(x - ei + ej) + func(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def standard_errors(
    spec: ModelSpec,
    fit: FitResult,
    data: StationSeries,
    free: Sequence[str] | None = None,
) -> dict[str, float]:
    """sqrt(diag(H^-1)) of the negative log-likelihood at the optimum, natural parameters.

    `free` restricts the Hessian to a subset of parameters (the others fixed).
    """
    if not fit.converged:
        raise DomainError("standard errors need a converged fit")
    names = list(free) if free is not None else list(spec.param_names)
    x0 = np.array([fit.params[k] for k in names])

    def f(x: np.ndarray) -> float:
        return _station_negloglik(spec, {**fit.params, **dict(zip(names, x))}, data)

    hess = numerical_hessian(f, x0)
    if not np.all(np.isfinite(hess)):
        raise SingularHessianError("Hessian has non-finite entries (optimum at a support boundary)")
    try:
        np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        raise SingularHessianError("Hessian is not positive definite") from None
    cov = np.linalg.inv(hess)
    return {k: float(math.sqrt(cov[i, i])) for i, k in enumerate(names)}


def trend_significance(fit: FitResult, trend_param_name: str) -> tuple[float, float]:
    """(z, two-sided normal p-value) for estimate / standard error."""
    if fit.std_errs is None or trend_param_name not in fit.std_errs:
        raise MissingStdErrError(f"no standard error for '{trend_param_name}'")
    se = fit.std_errs[trend_param_name]
    est = fit.params[trend_param_name]
    z = est / se if est != 0 else 0.0
    return z, min(1.0, 2.0 * float(stats.norm.sf(abs(z))))


def fitted_gev_arrays(spec: ModelSpec, fit: FitResult, series: StationSeries):
    """(mu, sigma, gamma) per observation of a fitted model on its own series."""
    return resolve_gev(spec, fit.params, series)
