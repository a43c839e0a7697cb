"""
Forecast laws: GEV / PGEV, the benchmark laws and empirical ensembles.

Usage:
    from extremescore.distributions import GevParams, gev_cdf, gev_quantile

    p = GevParams(mu=0.0, sigma=1.0, gamma=0.12)
    gev_cdf(p, 0.0)          # 0.3678...
    gev_quantile(p, 0.9)

Two layers live here:
    * array kernels (`gev_*_array`) that take broadcastable (mu, sigma, gamma)
      arrays, so fits with per-observation parameters and vectorized scoring
      share one code path
    * the public per-law API (`gev_cdf`, `forecast_sample`, ...) on pydantic
      parameter objects, dispatched over the Forecast union

Shapes with |gamma| < GAMMA_TOL use the Gumbel formulas. At and beyond a
support end point the cdf is exactly 0 or 1 and the log density is -inf.
"""

from __future__ import annotations

import math
from functools import singledispatch
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import special

from extremescore.errors import DomainError, ThresholdTooHighError

GAMMA_TOL = 1e-8
TINY_UNIFORM = 2.0**-54


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


# ---------------------------------------------------------------------------
# Parameter objects
# ---------------------------------------------------------------------------
class GevParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu: float
    sigma: float = Field(gt=0)
    gamma: float

    @property
    def is_gumbel(self) -> bool:
        return abs(self.gamma) < GAMMA_TOL

    @property
    def lower(self) -> float:
        """Left support end point (-inf unless gamma > 0)."""
        if self.gamma >= GAMMA_TOL:
            return self.mu - self.sigma / self.gamma
        return -math.inf

    @property
    def upper(self) -> float:
        """Right support end point (+inf unless gamma < 0)."""
        if self.gamma <= -GAMMA_TOL:
            return self.mu - self.sigma / self.gamma
        return math.inf

    def rescaled(self, k: float) -> "GevParams":
        """Same location and shape, scale multiplied by k."""
        return GevParams(mu=self.mu, sigma=k * self.sigma, gamma=self.gamma)


class PgevParams(BaseModel):
    """Frequency parameterisation: F(x) = exp{-lam (1 + gamma (x - u)/sigma_u)^(-1/gamma)}."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(gt=0)
    sigma_u: float = Field(gt=0)
    gamma: float
    u: float


BenchmarkKind = Literal["Ideal", "Extremist", "Climatological", "TauInformed"]


class BenchmarkForecast(BaseModel):
    """Forecasts for a latent-rate exponential observation Y | X ~ Exp(delta).

    Ideal          Exp(delta)
    Extremist      Exp(delta / nu)
    Climatological GP(1, xi)
    TauInformed    tau Exp(delta) + (1 - tau) GP(1, xi)
    """

    model_config = ConfigDict(frozen=True)

    kind: BenchmarkKind
    delta: float = Field(default=1.0, gt=0)
    nu: float = Field(default=1.0, ge=1)
    xi: float = Field(default=0.5, gt=0, lt=1)
    tau: float = Field(default=1.0, ge=0, le=1)


class Ensemble(BaseModel):
    model_config = ConfigDict(frozen=True)

    members: tuple[float, ...]

    @field_validator("members")
    @classmethod
    def _sorted_nonempty(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if len(v) == 0:
            raise ValueError("ensemble must have at least one member")
        return tuple(sorted(float(x) for x in v))

    @property
    def size(self) -> int:
        return len(self.members)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.members, dtype=float)


class TruncatedGev(BaseModel):
    """GEV conditioned on exceeding u: F_u(x) = (F(x) - F(u)) / (1 - F(u)) for x > u."""

    model_config = ConfigDict(frozen=True)

    base: GevParams
    u: float

    @classmethod
    def above(cls, base: GevParams, u: float) -> "TruncatedGev":
        if gev_log_survival(base, u) < math.log(1e-12):
            raise ThresholdTooHighError(
                f"P(Y > {u}) < 1e-12 under GEV({base.mu}, {base.sigma}, {base.gamma})"
            )
        return cls(base=base, u=float(u))

    @property
    def log_survival_u(self) -> float:
        return gev_log_survival(self.base, self.u)


Forecast = Union[GevParams, PgevParams, BenchmarkForecast, Ensemble, TruncatedGev]


# ---------------------------------------------------------------------------
# GEV array kernels
# ---------------------------------------------------------------------------
def _broadcast(*arrays):
    return np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in arrays))


def gev_neglog_cdf_array(mu, sigma, gamma, x):
    """t(x) = -log F(x): inf at/below the lower end point, 0 at/above the upper one."""
    mu, sigma, gamma, x = _broadcast(mu, sigma, gamma, x)
    z = (x - mu) / sigma
    gumbel = np.abs(gamma) < GAMMA_TOL
    g = np.where(gumbel, 1.0, gamma)
    arg = g * z
    inside = arg > -1.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        log_base = np.log1p(np.where(inside, arg, 0.0))
        t_gev = np.exp(-log_base / g)
        t_gum = np.exp(-z)
    t_gev = np.where(inside, t_gev, np.where(g > 0, np.inf, 0.0))
    return np.where(gumbel, t_gum, t_gev)


def gev_cdf_array(mu, sigma, gamma, x):
    return np.exp(-gev_neglog_cdf_array(mu, sigma, gamma, x))


def gev_logpdf_array(mu, sigma, gamma, x):
    mu, sigma, gamma, x = _broadcast(mu, sigma, gamma, x)
    z = (x - mu) / sigma
    gumbel = np.abs(gamma) < GAMMA_TOL
    g = np.where(gumbel, 1.0, gamma)
    arg = g * z
    inside = arg > -1.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        log_base = np.log1p(np.where(inside, arg, 0.0))
        lp_gev = -np.log(sigma) - (1.0 + 1.0 / g) * log_base - np.exp(-log_base / g)
        lp_gum = -np.log(sigma) - z - np.exp(-z)
    lp_gev = np.where(inside, lp_gev, -np.inf)
    out = np.where(gumbel, lp_gum, lp_gev)
    return np.where(np.isnan(out), -np.inf, out)


def gev_quantile_array(mu, sigma, gamma, prob):
    mu, sigma, gamma, prob = _broadcast(mu, sigma, gamma, prob)
    gumbel = np.abs(gamma) < GAMMA_TOL
    g = np.where(gumbel, 1.0, gamma)
    with np.errstate(divide="ignore"):
        log_t = np.log(-np.log(prob))
    q_gev = mu + sigma * np.expm1(-g * log_t) / g
    q_gum = mu - sigma * log_t
    return np.where(gumbel, q_gum, q_gev)


def gev_mean_array(mu, sigma, gamma):
    """E X; +inf for gamma >= 1."""
    mu, sigma, gamma = _broadcast(mu, sigma, gamma)
    gumbel = np.abs(gamma) < GAMMA_TOL
    g = np.where(gumbel | (gamma >= 1), 0.5, gamma)
    m_gev = mu + sigma * (special.gamma(1.0 - g) - 1.0) / g
    out = np.where(gumbel, mu + sigma * np.euler_gamma, m_gev)
    return np.where(gamma >= 1, np.inf, out)


def pgev_to_gev_array(lam, sigma_u, gamma, u):
    """(mu, sigma) of the GEV equal in law to PGEV(lam, sigma_u, gamma, u)."""
    lam, sigma_u, gamma, u = _broadcast(lam, sigma_u, gamma, u)
    log_lam = np.log(lam)
    gumbel = np.abs(gamma) < GAMMA_TOL
    g = np.where(gumbel, 1.0, gamma)
    mu = np.where(gumbel, u + sigma_u * log_lam, u + sigma_u * np.expm1(g * log_lam) / g)
    sigma = np.where(gumbel, sigma_u, sigma_u * np.exp(g * log_lam))
    return mu, sigma


# ---------------------------------------------------------------------------
# GEV / PGEV public API
# ---------------------------------------------------------------------------
def gev_cdf(p: GevParams, x):
    return _out(gev_cdf_array(p.mu, p.sigma, p.gamma, x))


def gev_log_cdf(p: GevParams, x):
    return _out(-gev_neglog_cdf_array(p.mu, p.sigma, p.gamma, x))


def gev_log_survival(p: GevParams, x):
    """log(1 - F(x)), accurate in the upper tail."""
    t = gev_neglog_cdf_array(p.mu, p.sigma, p.gamma, x)
    with np.errstate(divide="ignore"):
        return _out(np.log(-np.expm1(-t)))


def gev_logpdf(p: GevParams, x):
    return _out(gev_logpdf_array(p.mu, p.sigma, p.gamma, x))


def gev_quantile(p: GevParams, prob):
    prob_arr = np.asarray(prob, dtype=float)
    if np.any(~((prob_arr > 0) & (prob_arr < 1))):
        raise DomainError(f"gev_quantile needs prob in (0, 1), got {prob}")
    return _out(gev_quantile_array(p.mu, p.sigma, p.gamma, prob_arr))


def gev_mean(p: GevParams) -> float:
    return float(gev_mean_array(p.mu, p.sigma, p.gamma))


def pgev_to_gev(p: PgevParams) -> GevParams:
    mu, sigma = pgev_to_gev_array(p.lam, p.sigma_u, p.gamma, p.u)
    gamma = 0.0 if abs(p.gamma) < GAMMA_TOL else p.gamma
    return GevParams(mu=float(mu), sigma=float(sigma), gamma=gamma)


def pgev_cdf(p: PgevParams, x):
    """exp{-lam (1 + gamma (x - u)/sigma_u)^(-1/gamma)} evaluated directly."""
    t = gev_neglog_cdf_array(p.u, p.sigma_u, p.gamma, x)
    return _out(np.exp(-p.lam * t))


# ---------------------------------------------------------------------------
# Benchmark laws (array kernels in the latent rate delta)
# ---------------------------------------------------------------------------
def exp_cdf(rate, y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, -np.expm1(-np.asarray(rate) * np.maximum(y, 0.0)), 0.0)


def gp_cdf(xi: float, y):
    """Unit-scale generalized Pareto: 1 - (1 + xi y)^(-1/xi) for y >= 0."""
    y = np.maximum(np.asarray(y, dtype=float), 0.0)
    return -np.expm1(-np.log1p(xi * y) / xi)


def exp_logpdf(rate, y):
    y = np.asarray(y, dtype=float)
    rate = np.asarray(rate, dtype=float)
    return np.where(y >= 0, np.log(rate) - rate * y, -np.inf)


def gp_logpdf(xi: float, y):
    y = np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore"):
        lp = -(1.0 / xi + 1.0) * np.log1p(xi * np.maximum(y, 0.0))
    return np.where(y >= 0, lp, -np.inf)


def _benchmark_rate(f: BenchmarkForecast, delta):
    return delta / f.nu if f.kind == "Extremist" else delta


def benchmark_cdf(f: BenchmarkForecast, y, delta=None):
    """Forecast cdf; `delta` overrides f.delta (arrays allowed)."""
    delta = f.delta if delta is None else np.asarray(delta, dtype=float)
    if f.kind in ("Ideal", "Extremist"):
        return _out(exp_cdf(_benchmark_rate(f, delta), y))
    if f.kind == "Climatological":
        return _out(gp_cdf(f.xi, y))
    return _out(f.tau * exp_cdf(delta, y) + (1.0 - f.tau) * gp_cdf(f.xi, y))


def benchmark_logpdf(f: BenchmarkForecast, y, delta=None):
    delta = f.delta if delta is None else np.asarray(delta, dtype=float)
    if f.kind in ("Ideal", "Extremist"):
        return _out(exp_logpdf(_benchmark_rate(f, delta), y))
    if f.kind == "Climatological":
        return _out(gp_logpdf(f.xi, y))
    with np.errstate(divide="ignore"):
        return _out(
            np.logaddexp(
                np.log(f.tau) + exp_logpdf(delta, y),
                np.log1p(-f.tau) + gp_logpdf(f.xi, y),
            )
        )


def _exp_quantile(rate, u):
    return -np.log1p(-u) / rate


def _gp_quantile(xi, u):
    return np.expm1(-xi * np.log1p(-u)) / xi


# ---------------------------------------------------------------------------
# Forecast dispatch
# ---------------------------------------------------------------------------
@singledispatch
def forecast_cdf(f, x):
    raise TypeError(f"no cdf for forecast of type {type(f).__name__}")


@forecast_cdf.register
def _(f: GevParams, x):
    return gev_cdf(f, x)


@forecast_cdf.register
def _(f: PgevParams, x):
    return pgev_cdf(f, x)


@forecast_cdf.register
def _(f: BenchmarkForecast, x):
    return benchmark_cdf(f, x)


@forecast_cdf.register
def _(f: Ensemble, x):
    members = f.as_array()
    return _out(np.searchsorted(members, np.asarray(x, dtype=float), side="right") / f.size)


@forecast_cdf.register
def _(f: TruncatedGev, x):
    x = np.asarray(x, dtype=float)
    b = f.base
    t_x = gev_neglog_cdf_array(b.mu, b.sigma, b.gamma, x)
    t_u = float(gev_neglog_cdf_array(b.mu, b.sigma, b.gamma, f.u))
    # (F(x) - F(u)) / (1 - F(u)) with F = exp(-t)
    num = np.exp(-t_x) - math.exp(-t_u)
    out = np.where(x > f.u, num / -math.expm1(-t_u), 0.0)
    return _out(np.clip(out, 0.0, 1.0))


@singledispatch
def forecast_log_cdf(f, x):
    with np.errstate(divide="ignore"):
        return _out(np.log(np.asarray(forecast_cdf(f, x), dtype=float)))


@forecast_log_cdf.register
def _(f: GevParams, x):
    return gev_log_cdf(f, x)


@forecast_log_cdf.register
def _(f: PgevParams, x):
    return _out(-f.lam * gev_neglog_cdf_array(f.u, f.sigma_u, f.gamma, x))


@singledispatch
def forecast_logpdf(f, x):
    raise DomainError(f"forecast of type {type(f).__name__} has no density")


@forecast_logpdf.register
def _(f: GevParams, x):
    return gev_logpdf(f, x)


@forecast_logpdf.register
def _(f: PgevParams, x):
    return gev_logpdf(pgev_to_gev(f), x)


@forecast_logpdf.register
def _(f: BenchmarkForecast, x):
    return benchmark_logpdf(f, x)


@forecast_logpdf.register
def _(f: TruncatedGev, x):
    x = np.asarray(x, dtype=float)
    lp = gev_logpdf(f.base, x) - f.log_survival_u
    return _out(np.where(x > f.u, lp, -np.inf))


@singledispatch
def forecast_transform(f, u):
    """Map uniforms to draws from f (inverse cdf, or component selection for mixtures)."""
    raise TypeError(f"cannot sample forecast of type {type(f).__name__}")


@forecast_transform.register
def _(f: GevParams, u):
    return gev_quantile_array(f.mu, f.sigma, f.gamma, u)


@forecast_transform.register
def _(f: PgevParams, u):
    g = pgev_to_gev(f)
    return gev_quantile_array(g.mu, g.sigma, g.gamma, u)


@forecast_transform.register
def _(f: BenchmarkForecast, u):
    if f.kind in ("Ideal", "Extremist"):
        return _exp_quantile(_benchmark_rate(f, f.delta), u)
    if f.kind == "Climatological":
        return _gp_quantile(f.xi, u)
    if f.tau >= 1.0:
        return _exp_quantile(f.delta, u)
    if f.tau <= 0.0:
        return _gp_quantile(f.xi, u)
    from_exp = u < f.tau
    u_exp = np.where(from_exp, u / f.tau, 0.5)
    u_gp = np.where(from_exp, 0.5, (u - f.tau) / (1.0 - f.tau))
    return np.where(from_exp, _exp_quantile(f.delta, u_exp), _gp_quantile(f.xi, u_gp))


@forecast_transform.register
def _(f: Ensemble, u):
    idx = np.minimum((np.asarray(u) * f.size).astype(int), f.size - 1)
    return f.as_array()[idx]


@forecast_transform.register
def _(f: TruncatedGev, u):
    b = f.base
    f_u = gev_cdf(b, f.u)
    return gev_quantile_array(b.mu, b.sigma, b.gamma, f_u + (1.0 - f_u) * np.asarray(u))


def uniform_stream(n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniforms in (0, 1); exact zeros are replaced by 2^-54."""
    u = rng.random(n)
    u[u == 0.0] = TINY_UNIFORM
    return u


def forecast_sample(f: Forecast, n: int, rng_seed) -> np.ndarray:
    """n sorted draws from f driven by one uniform stream from rng_seed."""
    if n < 1:
        raise DomainError("forecast_sample needs n >= 1")
    rng = np.random.default_rng(rng_seed)
    return np.sort(np.asarray(forecast_transform(f, uniform_stream(n, rng)), dtype=float))


# ---------------------------------------------------------------------------
# Hierarchical benchmark generator
# ---------------------------------------------------------------------------
LatentMode = Literal["per_observation", "per_series"]


def draw_latent_rates(xi: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """X ~ Gamma(shape 1/xi, rate 1/xi): mean one, variance xi."""
    return rng.gamma(shape=1.0 / xi, scale=xi, size=size)


def benchmark_generate(
    xi: float,
    n_series: int,
    series_len: int,
    rng_seed,
    latent: LatentMode = "per_observation",
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw series from X ~ Gamma(1/xi, 1/xi), Y | X ~ Exp(X).

    Marginally Y ~ GP(1, xi). Each entry is (delta, y) with delta the latent
    rate behind every observation (constant within a series for latent="per_series").
    """
    if not 0 < xi < 1:
        raise DomainError(f"benchmark_generate needs xi in (0, 1), got {xi}")
    rng = np.random.default_rng(rng_seed)
    out: list[tuple[np.ndarray, np.ndarray]] = []
    for _ in range(n_series):
        if latent == "per_series":
            delta = np.full(series_len, draw_latent_rates(xi, 1, rng)[0])
        else:
            delta = draw_latent_rates(xi, series_len, rng)
        y = rng.standard_exponential(series_len) / delta
        out.append((delta, y))
    return out
