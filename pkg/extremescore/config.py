"""
Experiment configuration, runtime settings and logging setup.

Config files are flat `key = value` text (comments with #, lists comma
separated), e.g.

    experiment = ScaleThreshold
    master_seed = 42
    sigma_grid = 1, 2, 4, 8
    threshold_p = -inf, 0.5, 0.9, 0.99

Unknown keys are rejected. Defaults that depend on the experiment are filled
in after validation so the echoed config is the one that actually ran.

Environment (a .env file is honoured):
    EXTREMESCORE_THREADS     worker threads when --threads is not given (default 1)
    EXTREMESCORE_LOG_LEVEL   logging level (default INFO)
"""

from __future__ import annotations

import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Literal

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from extremescore.errors import ConfigError

load_dotenv()

ExperimentName = Literal[
    "Benchmark", "ScaleThreshold", "PairedScale", "LakesSim", "StationEval", "PermTrend"
]

SCORE_NAMES = ("LS", "LSq", "CRPS", "SCRPS", "wCRPS", "swCRPS")

LIST_FIELDS = {
    "score_set",
    "threshold_p",
    "xi_grid",
    "nu_list",
    "tau_list",
    "power_nu",
    "sigma_grid",
    "k_grid",
    "ab_stations",
}


def _maybe_float(text: str) -> float | str:
    try:
        return float(text)
    except ValueError:
        return text


def _grid(start: float, stop: float, step: float) -> list[float]:
    n = int(round((stop - start) / step))
    return [round(start + i * step, 10) for i in range(n + 1)]


# Per-experiment defaults. Draw counts follow the published studies.
DEFAULTS: dict[str, dict[str, Any]] = {
    "Benchmark": {
        "n_draws": 1_000_000,
        "n_replicates": 1000,
        "series_length": 100,
        "score_set": ["CRPS", "SCRPS"],
        "xi_grid": _grid(0.1, 0.9, 0.1),
        "nu_list": [1.1, 1.4, 1.8],
        "tau_list": [0.75, 0.5, 0.25],
        "power_nu": _grid(1.0, 2.0, 0.1),
    },
    "ScaleThreshold": {
        "n_draws": 50_000,
        "score_set": ["wCRPS", "swCRPS"],
        "threshold_p": [-math.inf, 0.5, 0.9, 0.99],
        "sigma_grid": [1.0, 2.0, 4.0, 8.0],
        "gamma": 0.12,
        "forecast_scale": 2.0,
    },
    "PairedScale": {
        "n_draws": 100_000,
        "score_set": ["wCRPS", "swCRPS"],
        "threshold_p": [0.9],
        "sigma1": 1.5,
        "sigma2": 3.0,
        "gamma": 0.12,
        "k_grid": _grid(0.5, 2.5, 0.1),
    },
    "LakesSim": {
        "n_replicates": 1000,
        "series_length": 100,
        "score_set": ["wCRPS", "swCRPS"],
        "threshold_p": [-math.inf, 0.5, 0.9],
        "k": 1.5,
    },
    "StationEval": {
        "score_set": list(SCORE_NAMES),
        "threshold_p": [0.9, 0.99],
        "min_years": 60,
        "n_stations": 50,
        "world_trend": 1.5,
        "world_gamma": 0.1,
    },
    "PermTrend": {
        "score_set": ["LS"],
        "threshold_p": [0.9],
        "min_years": 60,
        "n_stations": 50,
        "world_trend": 1.5,
        "world_gamma": 0.1,
        "model": "pgev_lambda",
        "n_permutations": 1,
    },
}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: ExperimentName
    master_seed: int = Field(ge=0, lt=2**64)

    n_replicates: int | None = Field(default=None, ge=1)
    series_length: int | None = Field(default=None, ge=2)
    n_draws: int | None = Field(default=None, ge=2)
    score_set: list[str] | None = None
    threshold_p: list[float] | None = None

    # Benchmark
    xi: float | None = Field(default=None, gt=0, lt=1)
    xi_grid: list[float] | None = None
    nu_list: list[float] | None = None
    tau_list: list[float] | None = None
    power_nu: list[float] | None = None
    latent: Literal["per_observation", "per_series"] = "per_observation"
    alpha: float = Field(default=0.05, gt=0, lt=1)

    # ScaleThreshold / PairedScale
    gamma: float | None = Field(default=None, gt=-1, lt=1)
    sigma_grid: list[float] | None = None
    forecast_scale: float | None = Field(default=None, gt=0)
    sigma1: float | None = Field(default=None, gt=0)
    sigma2: float | None = Field(default=None, gt=0)
    k_grid: list[float] | None = None
    fd_point: float = Field(default=1.5, gt=0)
    fd_step: float = Field(default=0.05, gt=0)

    # LakesSim
    lakes_preset: Literal["table", "text"] = "table"
    k: float | None = Field(default=None, gt=0)
    ab_stations: list[int] = [2, 4]
    ab_shape: Literal["shared", "station"] = "shared"

    # StationEval / PermTrend
    data_path: str | None = None
    covariate_path: str | None = None
    min_years: int | None = Field(default=None, ge=2)
    n_stations: int | None = Field(default=None, ge=1)
    world_trend: float | None = None
    world_gamma: float | None = Field(default=None, gt=-1, lt=1)
    model: Literal["gumbel", "gev", "gev_mu", "pgev_lambda"] | None = None
    n_permutations: int | None = Field(default=None, ge=1)
    fit_restarts: int = Field(default=5, ge=0)
    std_errs: bool = True

    @field_validator(*sorted(LIST_FIELDS), mode="before")
    @classmethod
    def _split_list(cls, v):
        if isinstance(v, str):
            return [_maybe_float(p.strip()) for p in v.split(",") if p.strip()]
        return v

    @field_validator("threshold_p")
    @classmethod
    def _check_probs(cls, v: list[float] | None) -> list[float] | None:
        if v is None:
            return v
        for p in v:
            if not (p == -math.inf or 0.0 <= p < 1.0):
                raise ValueError(f"threshold probability {p} must be -inf or in [0, 1)")
        return v

    @field_validator("score_set")
    @classmethod
    def _check_scores(cls, v: list[str] | None) -> list[str] | None:
        if v is None:
            return v
        bad = [s for s in v if s not in SCORE_NAMES]
        if bad:
            raise ValueError(f"unknown score(s) {bad}; choose from {', '.join(SCORE_NAMES)}")
        return v

    @field_validator("xi_grid")
    @classmethod
    def _check_xi_grid(cls, v: list[float] | None) -> list[float] | None:
        if v is not None and any(not 0 < x < 1 for x in v):
            raise ValueError("xi_grid values must lie in (0, 1)")
        return v

    @field_validator("tau_list")
    @classmethod
    def _check_tau(cls, v: list[float] | None) -> list[float] | None:
        if v is not None and any(not 0 <= x <= 1 for x in v):
            raise ValueError("tau_list values must lie in [0, 1]")
        return v

    @field_validator("nu_list", "power_nu")
    @classmethod
    def _check_nu(cls, v: list[float] | None) -> list[float] | None:
        if v is not None and any(x < 1 for x in v):
            raise ValueError("nu values must be >= 1")
        return v

    @model_validator(mode="after")
    def _apply_defaults(self) -> "ExperimentConfig":
        for key, val in DEFAULTS[self.experiment].items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, val)
        if self.experiment == "PermTrend" and self.model not in ("gev_mu", "pgev_lambda"):
            raise ValueError(f"PermTrend needs a trend model (gev_mu or pgev_lambda), got {self.model}")
        if len(self.ab_stations) != 2 or any(not 1 <= s <= 5 for s in self.ab_stations):
            raise ValueError("ab_stations must name two lakes among 1..5")
        return self


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------
def _format_validation_error(e: ValidationError) -> str:
    parts = []
    for err in e.errors():
        key = ".".join(str(x) for x in err["loc"]) or "config"
        if err["type"] == "extra_forbidden":
            parts.append(f"unknown key '{key}'")
        elif err["type"] == "missing":
            parts.append(f"missing required key '{key}'")
        else:
            parts.append(f"{key}: {err['msg']}")
    return "; ".join(parts)


def build_config(values: dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e)) from None


def read_config_file(path: str | Path) -> dict[str, str]:
    """Raw key -> value text of a config file; blank values are left out."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = dotenv_values(path, interpolate=False)
    return {k.strip(): v.strip() for k, v in raw.items() if v is not None and v.strip() != ""}


def parse_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Read a key = value file (None: no file) and apply overrides on top."""
    values: dict[str, Any] = read_config_file(path) if path is not None else {}
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return build_config(values)


# ---------------------------------------------------------------------------
# Runtime settings and logging
# ---------------------------------------------------------------------------
class RuntimeSettings(BaseModel):
    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"


def runtime_settings() -> RuntimeSettings:
    try:
        return RuntimeSettings(
            threads=int(os.getenv("EXTREMESCORE_THREADS", "1")),
            log_level=os.getenv("EXTREMESCORE_LOG_LEVEL", "INFO").upper(),
        )
    except (ValueError, ValidationError) as e:
        raise ConfigError(f"bad EXTREMESCORE_* environment setting: {e}") from None


class _TailFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        record.tag = record.name.rsplit(".", 1)[-1]
        return super().format(record)


def configure_logging(level: str | int = "INFO") -> None:
    """One stderr handler on the package logger: `[module] message`."""
    root = logging.getLogger("extremescore")
    for h in list(root.handlers):
        root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_TailFormatter("[%(tag)s] %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
