"""Shared fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from extremescore.distributions import GevParams
from extremescore.series import StationSeries


@pytest.fixture
def gev012() -> GevParams:
    return GevParams(mu=0.0, sigma=1.0, gamma=0.12)


@pytest.fixture
def gumbel() -> GevParams:
    return GevParams(mu=0.0, sigma=1.0, gamma=0.0)


@pytest.fixture
def make_series():
    """make_series(station_id, values, start_year=1950, covariate=None) -> StationSeries."""

    def _make(station_id: str, values, start_year: int = 1950, covariate=None) -> StationSeries:
        y = np.asarray(values, dtype=float)
        return StationSeries(
            station_id=station_id,
            years=tuple(range(start_year, start_year + y.size)),
            values=tuple(float(v) for v in y),
            covariate=None if covariate is None else tuple(float(c) for c in covariate),
        )

    return _make


@pytest.fixture
def write_file(tmp_path):
    def _write(name: str, text: str):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write
