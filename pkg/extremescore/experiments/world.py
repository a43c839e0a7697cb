"""
Synthetic station world for the case-study pipelines when no data file is given.

Each station has annual maxima from PGEV(lambda_t, sigma_i, gamma, u_i) with
lambda_t = exp(trend * t_year), u_i = 5 sigma_i and sigma_i lognormal over
stations. The covariate t is a smooth logistic ramp over 1900-2014, standing
in for a smoothed hemispheric temperature anomaly. Records end in 2014 and
span 60-115 years. trend = 0 gives stationary GEV(u_i, sigma_i, gamma).
"""

from __future__ import annotations

import numpy as np

from extremescore.distributions import gev_quantile_array, pgev_to_gev_array, uniform_stream
from extremescore.seeding import unit_rng
from extremescore.series import StationSeries

FIRST_YEAR = 1900
LAST_YEAR = 2014
MIN_RECORD = 60


def covariate_ramp(years) -> np.ndarray:
    years = np.asarray(years, dtype=float)
    return -0.3 + 0.9 / (1.0 + np.exp(-(years - 1980.0) / 15.0))


def world_covariate(constant: bool = False) -> dict[int, float]:
    years = np.arange(FIRST_YEAR, LAST_YEAR + 1)
    values = np.zeros(years.size) if constant else covariate_ramp(years)
    return {int(y): float(v) for y, v in zip(years, values)}


def synthetic_world(
    n_stations: int,
    trend: float,
    gamma: float,
    master_seed: int,
    constant_covariate: bool = False,
) -> tuple[list[StationSeries], dict[int, float]]:
    """(stations with covariate attached, year -> covariate)."""
    covariate = world_covariate(constant_covariate)
    rng = unit_rng(master_seed, 0)
    sigmas = np.exp(rng.normal(np.log(10.0), 0.4, size=n_stations))
    lengths = rng.integers(MIN_RECORD, LAST_YEAR - FIRST_YEAR + 2, size=n_stations)

    out: list[StationSeries] = []
    for i in range(n_stations):
        years = np.arange(LAST_YEAR - int(lengths[i]) + 1, LAST_YEAR + 1)
        t = np.array([covariate[int(y)] for y in years])
        mu, sigma = pgev_to_gev_array(np.exp(trend * t), sigmas[i], gamma, 5.0 * sigmas[i])
        v = uniform_stream(years.size, unit_rng(master_seed, 1, i))
        y = gev_quantile_array(mu, sigma, gamma, v)
        out.append(
            StationSeries(
                station_id=f"S{i + 1:03d}",
                years=tuple(int(x) for x in years),
                values=tuple(float(x) for x in y),
                covariate=tuple(float(x) for x in t),
            )
        )
    return out, covariate
