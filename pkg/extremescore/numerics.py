"""
Special functions and the quadrature oracle behind the closed-form scores.

    lower_inc_gamma(a, tau)   Γ_l(a, τ) = ∫_0^τ t^(a-1) e^-t dt,  a > 0
    upper_inc_gamma(a, tau)   Γ_u(a, τ) = ∫_τ^∞ t^(a-1) e^-t dt,  any real a, τ > 0
    expint_ei(x)              Ei(x), principal value for x > 0
    quad_wcrps_oracle(...)    -∫ w(x) (F(x) - 1{y <= x})^2 dx by adaptive quadrature

The regularized incomplete gammas and Ei come from scipy.special, which already
switches between series and continued-fraction evaluation internally. Negative
first arguments of Γ_u are reached by the downward recurrence

    Γ_u(a, τ) = (Γ_u(a + 1, τ) - τ^a e^-τ) / a

started from a base in (0, 1] (or from E_1 when a is an integer).
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, special

from extremescore.errors import DomainError, OracleFailureError
from extremescore.weights import WeightSpec

logger = logging.getLogger(__name__)

EULER_GAMMA = float(np.euler_gamma)


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(default=1e-10, gt=0)
    rel_tol: float = Field(default=1e-8, gt=0)
    max_subdivisions: int = Field(default=2000, ge=1)


DEFAULT_QUADRATURE = QuadratureSpec()


def _scalar_or_array(out: np.ndarray):
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Incomplete gamma functions
# ---------------------------------------------------------------------------
def lower_inc_gamma(a, tau):
    """Γ_l(a, τ). Broadcasts over arrays; τ = inf gives Γ(a)."""
    a = np.asarray(a, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(a <= 0):
        raise DomainError(f"lower_inc_gamma needs a > 0, got {a}")
    if np.any(tau < 0) or np.any(np.isnan(tau)):
        raise DomainError(f"lower_inc_gamma needs tau >= 0, got {tau}")
    return _scalar_or_array(special.gammainc(a, tau) * special.gamma(a))


def upper_inc_gamma(a: float, tau):
    """Γ_u(a, τ) for scalar a (any sign) and τ > 0 (array allowed)."""
    a = float(a)
    tau = np.asarray(tau, dtype=float)
    if np.any(~(tau > 0)):
        raise DomainError(f"upper_inc_gamma needs tau > 0, got {tau}")
    if a > 0:
        return _scalar_or_array(special.gammaincc(a, tau) * special.gamma(a))

    steps = math.ceil(-a)
    base = a + steps
    if base == 0.0:
        out = special.exp1(tau)
    else:
        if base <= 0:  # ceil rounding on a value like -2.0000000001
            steps += 1
            base += 1.0
        out = special.gammaincc(base, tau) * special.gamma(base)

    log_tau = np.log(tau)
    for j in range(steps - 1, -1, -1):
        b = a + j
        out = (out - np.exp(b * log_tau - tau)) / b
    return _scalar_or_array(out)


def log_upper_inc_gamma(a: float, tau):
    """log Γ_u(a, τ); Γ_u is positive for every real a."""
    return _scalar_or_array(np.log(np.asarray(upper_inc_gamma(a, tau), dtype=float)))


# ---------------------------------------------------------------------------
# Exponential integral
# ---------------------------------------------------------------------------
def expint_ei(x):
    """Ei(x). Ei(-inf) = 0; x = 0 is a logarithmic singularity."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError("expint_ei is singular at x = 0")
    return _scalar_or_array(special.expi(x))


def ei_of_neg_exp(s):
    """Ei(-exp(-s)), stable for large s where exp(-s) underflows to 0.

    For small τ = exp(-s), Ei(-τ) = C + ln τ - τ + O(τ^2), so the limit is C - s.
    """
    s = np.asarray(s, dtype=float)
    big = s > 700.0
    with np.errstate(over="ignore"):
        tau = np.exp(-np.where(big, 0.0, s))
    out = np.where(big, EULER_GAMMA - s, special.expi(-tau))
    return _scalar_or_array(out)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------
def quad_integral(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    breakpoints: Sequence[float] = (),
) -> float:
    """∫_lo^hi func, split at the finite breakpoints that fall inside (lo, hi).

    Infinite limits are handed to QUADPACK, which maps them onto (0, 1].
    """
    if not hi > lo:
        return 0.0
    cuts = sorted({float(b) for b in breakpoints if lo < b < hi and math.isfinite(b)})
    edges = [lo, *cuts, hi]
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        res = integrate.quad(
            func,
            left,
            right,
            epsabs=spec.abs_tol,
            epsrel=spec.rel_tol,
            limit=spec.max_subdivisions,
            full_output=1,
        )
        total += res[0]
        if len(res) > 3:
            msg = str(res[3])
            if "maximum number of subdivisions" in msg:
                raise OracleFailureError(
                    f"quadrature on [{left}, {right}] did not converge within "
                    f"{spec.max_subdivisions} subdivisions"
                )
            logger.warning("quadrature on [%s, %s] flagged: %s", left, right, msg.splitlines()[0])
    return total


def quad_wcrps_oracle(
    cdf: Callable[[float], float],
    weight: WeightSpec,
    y: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    support: tuple[float, float] = (-math.inf, math.inf),
) -> float:
    """wCRPS(F, y) = -∫ w(x) (F(x) - 1{y <= x})^2 dx, higher is better.

    `support` trims the integration range to where F moves; outside it the
    integrand is either zero or accounted for by the y breakpoint.
    """
    lo, hi = support
    lo = min(lo, y)
    hi = max(hi, y)
    if weight.kind == "quantile":
        lo = max(lo, weight.q)

    def integrand(x: float) -> float:
        step = 1.0 if y <= x else 0.0
        return float(weight.density(x)) * (float(cdf(x)) - step) ** 2

    return -quad_integral(integrand, lo, hi, spec, breakpoints=(y, weight.threshold))
