"""
Station annual-maximum series: ingestion, covariate join and CSV writing.

Station CSV (UTF-8, header required):
    station_id,year,value[,covariate]

Covariate CSV:
    year,covariate

Rows with a blank field are dropped and counted; anything else that does not
parse is an error naming its line.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from extremescore.errors import DuplicateRowError, MissingYearError, ParseError

logger = logging.getLogger(__name__)

STATION_COLUMNS = ("station_id", "year", "value")
COVARIATE_COLUMNS = ("year", "covariate")


class StationSeries(BaseModel):
    model_config = ConfigDict(frozen=True)

    station_id: str
    years: tuple[int, ...]
    values: tuple[float, ...]
    covariate: tuple[float, ...] | None = None

    @model_validator(mode="after")
    def _aligned(self) -> "StationSeries":
        n = len(self.years)
        if len(self.values) != n:
            raise ValueError(f"station {self.station_id}: {n} years but {len(self.values)} values")
        if self.covariate is not None and len(self.covariate) != n:
            raise ValueError(f"station {self.station_id}: covariate length differs from years")
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise ValueError(f"station {self.station_id}: years must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.years)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def t(self) -> np.ndarray | None:
        return None if self.covariate is None else np.asarray(self.covariate, dtype=float)

    def with_covariate(self, covariate) -> "StationSeries":
        return self.model_copy(update={"covariate": tuple(float(c) for c in covariate)})


class StationLoad(BaseModel):
    """Parsed station file plus ingestion bookkeeping."""

    series: list[StationSeries]
    dropped_rows: int = 0
    short_stations: list[str] = []


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------
def _read_text_table(path: Path, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in required if c not in df.columns]
    extra = [c for c in df.columns if c not in required + optional]
    if missing or extra:
        raise ParseError(
            f"{path}: header must be {','.join(required + optional)}; "
            f"missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    return df


def _parse_float(text: str, path: Path, line: int, col: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"{path}:{line}: column '{col}' is not a number: {text!r}") from None
    if not math.isfinite(val):
        raise ParseError(f"{path}:{line}: column '{col}' is not finite: {text!r}")
    return val


def _parse_year(text: str, path: Path, line: int) -> int:
    val = _parse_float(text, path, line, "year")
    if val != int(val):
        raise ParseError(f"{path}:{line}: year is not an integer: {text!r}")
    return int(val)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------
def load_station_csv(path: str | Path, min_years: int = 0) -> StationLoad:
    """Group rows into year-sorted StationSeries; stations are ordered by id."""
    path = Path(path)
    df = _read_text_table(path, STATION_COLUMNS, ("covariate",))
    has_cov = "covariate" in df.columns

    rows: dict[str, dict[int, tuple[float, float | None]]] = {}
    seen_at: dict[tuple[str, int], int] = {}
    dropped = 0
    for i, rec in enumerate(df.itertuples(index=False)):
        line = i + 2
        fields = rec._asdict()
        sid = fields["station_id"].strip()
        texts = [fields["year"].strip(), fields["value"].strip()]
        cov_text = fields["covariate"].strip() if has_cov else None
        if not sid or any(t == "" for t in texts) or cov_text == "":
            dropped += 1
            continue
        year = _parse_year(texts[0], path, line)
        value = _parse_float(texts[1], path, line, "value")
        cov = _parse_float(cov_text, path, line, "covariate") if has_cov else None
        key = (sid, year)
        if key in seen_at:
            raise DuplicateRowError(
                f"{path}:{line}: station {sid} year {year} already given on line {seen_at[key]}"
            )
        seen_at[key] = line
        rows.setdefault(sid, {})[year] = (value, cov)

    series: list[StationSeries] = []
    short: list[str] = []
    for sid in sorted(rows):
        years = sorted(rows[sid])
        series.append(
            StationSeries(
                station_id=sid,
                years=tuple(years),
                values=tuple(rows[sid][y][0] for y in years),
                covariate=tuple(rows[sid][y][1] for y in years) if has_cov else None,
            )
        )
        if len(years) < min_years:
            short.append(sid)

    if dropped:
        logger.warning("%s: dropped %d row(s) with blank fields", path.name, dropped)
    if short:
        logger.warning("%d station(s) below %d years: %s", len(short), min_years, ", ".join(short[:10]))
    logger.info("%s: %d stations, %d rows", path.name, len(series), sum(len(s) for s in series))
    return StationLoad(series=series, dropped_rows=dropped, short_stations=short)


def load_covariate_csv(path: str | Path) -> dict[int, float]:
    path = Path(path)
    df = _read_text_table(path, COVARIATE_COLUMNS)
    out: dict[int, float] = {}
    for i, rec in enumerate(df.itertuples(index=False)):
        line = i + 2
        year = _parse_year(rec.year.strip(), path, line)
        if year in out:
            raise DuplicateRowError(f"{path}:{line}: year {year} given twice")
        out[year] = _parse_float(rec.covariate.strip(), path, line, "covariate")
    return dict(sorted(out.items()))


def join_covariate(series: list[StationSeries], covariate: dict[int, float]) -> list[StationSeries]:
    """Attach covariate values by year; any station year without one is an error."""
    joined: list[StationSeries] = []
    for s in series:
        gaps = [y for y in s.years if y not in covariate]
        if gaps:
            raise MissingYearError(
                f"station {s.station_id}: no covariate for year(s) {', '.join(map(str, gaps[:5]))}"
            )
        joined.append(s.with_covariate(covariate[y] for y in s.years))
    return joined


def write_station_csv(series: list[StationSeries], path: str | Path) -> Path:
    path = Path(path)
    with_cov = any(s.covariate is not None for s in series)
    records = []
    for s in sorted(series, key=lambda s: s.station_id):
        for k, (year, value) in enumerate(zip(s.years, s.values)):
            rec = {"station_id": s.station_id, "year": year, "value": value}
            if with_cov:
                rec["covariate"] = s.covariate[k] if s.covariate is not None else math.nan
            records.append(rec)
    columns = list(STATION_COLUMNS) + (["covariate"] if with_cov else [])
    pd.DataFrame.from_records(records, columns=columns).to_csv(
        path, index=False, float_format="%.17g", lineterminator="\n"
    )
    return path
