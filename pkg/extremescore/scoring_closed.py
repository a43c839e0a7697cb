"""
Closed-form scores. Every score is positively oriented: higher is better and
kernel scores are <= 0.

GEV with a quantile weight w(x) = 1{x >= q} (q = -inf is the unweighted case),
m = max(q, y), t(x) = -log F(x), c = mu - sigma/gamma:

    wCRPS  = E/2 - E_y
    E      = E|W(X) - W(X')|
    E_y    = E|W(X) - W(y)|
    swCRPS = wCRPS/E - log(E)/2 - 1/2 = -E_y/E - log(E)/2

gamma != 0 (Γ_l(·) = Γ_l(1 - gamma, ·)):
    wCRPS = (q - c) F(q)^2 + (m - c)(1 - 2F(m)) + (sigma/gamma)[2^gamma Γ_l(2t_q) - 2Γ_l(t_m)]
    E     = -2(q - c) F(q)(1 - F(q)) + 2(sigma/gamma)[2^gamma Γ_l(2t_q) - Γ_l(t_q)]
    E_y   = (m - c)(2F(m) - 1) - (q - c) F(q) + (sigma/gamma)[2Γ_l(t_m) - Γ_l(t_q)]

gamma = 0 (Ei(-inf) = 0):
    wCRPS = (m - mu) - sigma(C - log 2) - sigma[Ei(-2t_q) - 2Ei(-t_m)]
    E     = 2 sigma log 2 - 2 sigma[Ei(-2t_q) - Ei(-t_q)]
    E_y   = (mu - m) + sigma C + sigma[Ei(-t_q) - 2Ei(-t_m)]

Affine weights a + b 1{x >= u} act linearly on wCRPS, E and E_y. The scaled
score is then built from the combined E.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from extremescore.distributions import (
    GAMMA_TOL,
    BenchmarkForecast,
    Forecast,
    GevParams,
    _broadcast,
    forecast_log_cdf,
    forecast_logpdf,
    gev_cdf_array,
    gev_neglog_cdf_array,
    gev_quantile_array,
)
from extremescore.errors import DegenerateWeightError, DomainError, NonexistenceError
from extremescore.numerics import (
    DEFAULT_QUADRATURE,
    EULER_GAMMA,
    QuadratureSpec,
    ei_of_neg_exp,
    log_upper_inc_gamma,
    quad_integral,
)
from extremescore.weights import WeightSpec

LOG2 = math.log(2.0)

ScoreValue = float


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


# ---------------------------------------------------------------------------
# GEV kernel terms (array level, quantile weight)
# ---------------------------------------------------------------------------
def _gamma_l(a, tau):
    """Γ_l(a, τ) for array a > 0, τ in [0, inf]."""
    return special.gammainc(a, tau) * special.gamma(a)


def gev_kernel_terms(mu, sigma, gamma, q, y=None):
    """(wCRPS, E, E_y) for W(x) = max(x - q, 0); wCRPS and E_y are None when y is None.

    All arguments broadcast; q = -inf gives the unweighted kernel.
    """
    with_obs = y is not None
    mu, sigma, gamma, q, y = _broadcast(mu, sigma, gamma, q, 0.0 if y is None else y)
    if np.any(gamma >= 1):
        raise NonexistenceError("CRPS-type scores do not exist for gamma >= 1")

    gumbel = np.abs(gamma) < GAMMA_TOL
    g = np.where(gumbel, 0.5, gamma)
    m = np.maximum(q, y)

    t_q = gev_neglog_cdf_array(mu, sigma, g, q)
    t_m = gev_neglog_cdf_array(mu, sigma, g, m)
    f_q = np.exp(-t_q)
    f_m = np.exp(-t_m)
    a = 1.0 - g
    c = mu - sigma / g
    has_mass = f_q > 0

    with np.errstate(invalid="ignore", over="ignore"):
        qc_fq = np.where(has_mass, (q - c) * f_q, 0.0)
        gl_2q = _gamma_l(a, 2.0 * t_q)
        gl_q = _gamma_l(a, t_q)
        e_gev = -2.0 * qc_fq * (1.0 - f_q) + 2.0 * (sigma / g) * (2.0**g * gl_2q - gl_q)

    # Gumbel: s = (x - mu)/sigma, t = exp(-s); Ei(-t) and Ei(-2t) = Ei(-exp(-(s - log 2)))
    s_q = np.where(np.isfinite(q), (q - mu) / sigma, -np.inf)
    ei_q = np.where(np.isfinite(s_q), ei_of_neg_exp(np.where(np.isfinite(s_q), s_q, 0.0)), 0.0)
    ei_2q = np.where(
        np.isfinite(s_q), ei_of_neg_exp(np.where(np.isfinite(s_q), s_q - LOG2, 0.0)), 0.0
    )
    e_gum = 2.0 * sigma * LOG2 - 2.0 * sigma * (ei_2q - ei_q)

    ew = np.maximum(np.where(gumbel, e_gum, e_gev), 0.0)
    if not with_obs:
        return None, _out(ew), None

    with np.errstate(invalid="ignore", over="ignore"):
        gl_m = _gamma_l(a, t_m)
        ey_gev = (m - c) * (2.0 * f_m - 1.0) - qc_fq + (sigma / g) * (2.0 * gl_m - gl_q)
    s_m = (m - mu) / sigma
    ei_m = ei_of_neg_exp(s_m)
    ey_gum = (mu - m) + sigma * EULER_GAMMA + sigma * (ei_q - 2.0 * ei_m)

    ey = np.where(gumbel, ey_gum, ey_gev)
    wcrps = 0.5 * ew - ey
    return _out(wcrps), _out(ew), _out(ey)


def _weighted_terms(p: GevParams, weight: WeightSpec, y):
    """(wCRPS, E, E_y) for any WeightSpec, combining affine components linearly."""
    wcrps = ew = ey = 0.0
    for coef, part in weight.components():
        q = -math.inf if part.kind == "unweighted" else part.q
        w_i, e_i, y_i = gev_kernel_terms(p.mu, p.sigma, p.gamma, q, y)
        wcrps = wcrps + coef * np.asarray(w_i)
        ew = ew + coef * np.asarray(e_i)
        ey = ey + coef * np.asarray(y_i)
    return wcrps, ew, ey


def _check_nonexistence(p: GevParams) -> None:
    if p.gamma >= 1:
        raise NonexistenceError(f"CRPS does not exist for gamma = {p.gamma} >= 1")


def _check_degenerate(p: GevParams, weight: WeightSpec, ew) -> None:
    if weight.kind == "quantile" and weight.q >= p.upper:
        raise DegenerateWeightError(
            f"threshold {weight.q} is at or beyond the upper end point {p.upper}"
        )
    if np.any(np.asarray(ew) <= 0):
        raise DegenerateWeightError("E|W(X) - W(X')| is zero for this weight")


# ---------------------------------------------------------------------------
# GEV public scores
# ---------------------------------------------------------------------------
def crps_gev(p: GevParams, y) -> ScoreValue:
    _check_nonexistence(p)
    wcrps, _, _ = gev_kernel_terms(p.mu, p.sigma, p.gamma, -math.inf, y)
    return wcrps


def wcrps_gev(p: GevParams, weight: WeightSpec, y) -> ScoreValue:
    _check_nonexistence(p)
    wcrps, _, _ = _weighted_terms(p, weight, y)
    return _out(wcrps)


def ew_dist_gev(p: GevParams, weight: WeightSpec) -> float:
    """E|W(X) - W(X')| under GEV p."""
    _check_nonexistence(p)
    ew = 0.0
    for coef, part in weight.components():
        q = -math.inf if part.kind == "unweighted" else part.q
        _, e_i, _ = gev_kernel_terms(p.mu, p.sigma, p.gamma, q)
        ew += coef * float(e_i)
    _check_degenerate(p, weight, ew)
    return ew


def expected_obs_dist_gev(p: GevParams, weight: WeightSpec, y):
    """E|W(X) - W(y)| under GEV p."""
    _check_nonexistence(p)
    _, _, ey = _weighted_terms(p, weight, y)
    return _out(ey)


def swcrps_gev(p: GevParams, weight: WeightSpec, y) -> ScoreValue:
    """wCRPS/E - log(E)/2 - 1/2."""
    _check_nonexistence(p)
    wcrps, ew, _ = _weighted_terms(p, weight, y)
    _check_degenerate(p, weight, ew)
    return _out(wcrps / ew - 0.5 * np.log(ew) - 0.5)


def swcrps_gev_direct(p: GevParams, weight: WeightSpec, y) -> ScoreValue:
    """-E_y/E - log(E)/2."""
    _check_nonexistence(p)
    _, ew, ey = _weighted_terms(p, weight, y)
    _check_degenerate(p, weight, ew)
    return _out(-ey / ew - 0.5 * np.log(ew))


def scrps_gev(p: GevParams, y) -> ScoreValue:
    return swcrps_gev(p, WeightSpec.unweighted(), y)


def transformed_score(score_obs, score_self):
    """S/|S(P,P)| - log|S(P,P)|, proper whenever S is negative and proper."""
    mag = np.abs(np.asarray(score_self, dtype=float))
    return _out(np.asarray(score_obs, dtype=float) / mag - np.log(mag))


# ---------------------------------------------------------------------------
# Quantile-integral forms
# ---------------------------------------------------------------------------
def ew_dist_quantile_form(
    p: GevParams, q: float, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """E|W_q(X) - W_q(X')| = 2 ∫_{F(q)}^1 (Q(t) - q)(2t - 1) dt."""
    f_q = float(gev_cdf_array(p.mu, p.sigma, p.gamma, q))
    if f_q >= 1.0:
        return 0.0
    base = q if np.isfinite(q) else 0.0

    def integrand(t: float) -> float:
        qt = float(gev_quantile_array(p.mu, p.sigma, p.gamma, t))
        return (qt - base) * (2.0 * t - 1.0)

    return 2.0 * quad_integral(integrand, f_q, 1.0, spec, breakpoints=(0.5,))


def wcrps_quantile_form(
    p: GevParams, q: float, y: float, spec: QuadratureSpec = DEFAULT_QUADRATURE
) -> float:
    """-2 ∫_0^1 (1{W(y) < W(Q(t))} - t)(W(Q(t)) - W(y)) dt, with the flat part below F(q) done exactly."""
    f_q = float(gev_cdf_array(p.mu, p.sigma, p.gamma, q)) if np.isfinite(q) else 0.0
    w_y = max(y - q, 0.0) if np.isfinite(q) else y
    f_y = float(gev_cdf_array(p.mu, p.sigma, p.gamma, y))

    def chain(x: float) -> float:
        return max(x - q, 0.0) if np.isfinite(q) else x

    def integrand(t: float) -> float:
        wq = chain(float(gev_quantile_array(p.mu, p.sigma, p.gamma, t)))
        return ((1.0 if w_y < wq else 0.0) - t) * (wq - w_y)

    flat = -(f_q**2) * w_y if np.isfinite(q) else 0.0
    return flat - 2.0 * quad_integral(integrand, f_q, 1.0, spec, breakpoints=(f_y,))


# ---------------------------------------------------------------------------
# Log-type scores
# ---------------------------------------------------------------------------
def log_score(f: Forecast, y) -> ScoreValue:
    return forecast_logpdf(f, y)


def censored_ls(f: Forecast, q: float, y) -> ScoreValue:
    """log F(q) for y <= q, log f(y) for y > q."""
    y = np.asarray(y, dtype=float)
    below = y <= q
    log_fq = float(forecast_log_cdf(f, q))
    above = np.asarray(forecast_logpdf(f, y), dtype=float)
    return _out(np.where(below, log_fq, above))


# ---------------------------------------------------------------------------
# Benchmark laws
# ---------------------------------------------------------------------------
def _check_benchmark_domain(delta, xi=None, tau=None, nu=None) -> None:
    if np.any(np.asarray(delta) <= 0):
        raise DomainError("delta must be positive")
    if xi is not None and not 0 < xi < 1:
        raise DomainError(f"xi must lie in (0, 1), got {xi}")
    if tau is not None and not 0 <= tau <= 1:
        raise DomainError(f"tau must lie in [0, 1], got {tau}")
    if nu is not None and nu < 1:
        raise DomainError(f"nu must be >= 1, got {nu}")


def _exp_obs_dist(rate, y):
    """E|X - y| for X ~ Exp(rate), y >= 0."""
    return y - 1.0 / rate + 2.0 * np.exp(-rate * y) / rate


def _gp_obs_dist(xi: float, y):
    """E|X - y| for X ~ GP(1, xi), y >= 0."""
    return y - 1.0 / (1.0 - xi) + 2.0 * np.exp((1.0 - 1.0 / xi) * np.log1p(xi * y)) / (1.0 - xi)


def exp_gp_laplace_integral(delta, xi: float):
    """K = ∫_0^∞ e^(-delta x)(1 + xi x)^(-1/xi) dx = e^(δ/ξ) Γ_u(a, δ/ξ) / (ξ^(1/ξ) δ^a), a = (ξ-1)/ξ."""
    delta = np.asarray(delta, dtype=float)
    a = (xi - 1.0) / xi
    z = delta / xi
    log_k = z + log_upper_inc_gamma(a, z) - math.log(xi) / xi - a * np.log(delta)
    return _out(np.exp(log_k))


def crps_extremist(delta, nu: float, y) -> ScoreValue:
    """-y - (2ν/δ) exp(-δy/ν) + 3ν/(2δ); nu = 1 is the ideal forecast."""
    _check_benchmark_domain(delta, nu=nu)
    delta = np.asarray(delta, dtype=float)
    y = np.asarray(y, dtype=float)
    return _out(-y - (2.0 * nu / delta) * np.exp(-delta * y / nu) + 1.5 * nu / delta)


def crps_climatological(xi: float, y) -> ScoreValue:
    _check_benchmark_domain(1.0, xi=xi)
    y = np.asarray(y, dtype=float)
    return _out(0.5 * climatological_expected_dist(xi) - _gp_obs_dist(xi, y))


def climatological_expected_dist(xi: float) -> float:
    return 2.0 / ((2.0 - xi) * (1.0 - xi))


def tau_informed_expected_dist(delta, xi: float, tau: float):
    delta = np.asarray(delta, dtype=float)
    out = 2.0 * (
        tau / delta
        - tau**2 / (2.0 * delta)
        + (1.0 - tau) / (1.0 - xi)
        - (1.0 - tau) ** 2 / (2.0 - xi)
    )
    if 0.0 < tau < 1.0:
        out = out - 4.0 * tau * (1.0 - tau) * exp_gp_laplace_integral(delta, xi)
    return _out(out)


def crps_tau_informed(delta, xi: float, tau: float, y) -> ScoreValue:
    """CRPS of tau Exp(delta) + (1 - tau) GP(1, xi)."""
    _check_benchmark_domain(delta, xi=xi, tau=tau)
    delta = np.asarray(delta, dtype=float)
    y = np.asarray(y, dtype=float)
    e_obs = tau * _exp_obs_dist(delta, y) + (1.0 - tau) * _gp_obs_dist(xi, y)
    return _out(0.5 * np.asarray(tau_informed_expected_dist(delta, xi, tau)) - e_obs)


def benchmark_expected_dist(forecast: BenchmarkForecast, delta=None):
    """E|X - X'| under the forecast; `delta` overrides forecast.delta (arrays allowed)."""
    delta = forecast.delta if delta is None else np.asarray(delta, dtype=float)
    if forecast.kind == "Ideal":
        return _out(1.0 / np.asarray(delta, dtype=float))
    if forecast.kind == "Extremist":
        return _out(forecast.nu / np.asarray(delta, dtype=float))
    if forecast.kind == "Climatological":
        return climatological_expected_dist(forecast.xi)
    return tau_informed_expected_dist(delta, forecast.xi, forecast.tau)


def crps_benchmark(forecast: BenchmarkForecast, y, delta=None) -> ScoreValue:
    delta = forecast.delta if delta is None else np.asarray(delta, dtype=float)
    if forecast.kind == "Ideal":
        return crps_extremist(delta, 1.0, y)
    if forecast.kind == "Extremist":
        return crps_extremist(delta, forecast.nu, y)
    if forecast.kind == "Climatological":
        return crps_climatological(forecast.xi, y)
    return crps_tau_informed(delta, forecast.xi, forecast.tau, y)


def scrps_benchmark(forecast: BenchmarkForecast, y, delta=None) -> ScoreValue:
    """CRPS/E - log(E)/2 - 1/2 with E the forecast's expected absolute difference."""
    crps = np.asarray(crps_benchmark(forecast, y, delta), dtype=float)
    ew = np.asarray(benchmark_expected_dist(forecast, delta), dtype=float)
    return _out(crps / ew - 0.5 * np.log(ew) - 0.5)
