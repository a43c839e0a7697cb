"""
Experiment results, run manifests and their emission to disk.

Usage:
    result = ExperimentResult(experiment="ScaleThreshold", master_seed=42)
    result.add("wCRPS", 0.9, "sigma=1", 0, 0.0123)
    result.add_summary("wCRPS", 0.9, "sigma=1", "mean", 0.0123)
    emit_results(result, Path("out"), plots=False, config=cfg)

Files written to out_dir:
    results.csv      experiment,score,threshold_p,label,replicate,value
    summary.csv      experiment,score,threshold_p,label,stat,value
    <table>.csv      any extra tables (fitted scales, skipped stations, ...)
    manifest.json    tool version, resolved config, seed, input digests, timestamps
    *.svg            figures, when plots are requested
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

LONG_COLUMNS = ["experiment", "score", "threshold_p", "label", "replicate", "value"]
SUMMARY_COLUMNS = ["experiment", "score", "threshold_p", "label", "stat", "value"]
FLOAT_FORMAT = "%.17g"


class ExperimentResult(BaseModel):
    experiment: str
    master_seed: int
    records: list[dict[str, Any]] = Field(default_factory=list)
    summary: list[dict[str, Any]] = Field(default_factory=list)
    tables: dict[str, list[dict[str, Any]]] = Field(default_factory=dict)
    dropped_rows: int = 0

    def add(self, score: str, threshold_p: float, label: str, replicate: int, value: float) -> None:
        self.records.append(
            {
                "experiment": self.experiment,
                "score": score,
                "threshold_p": float(threshold_p),
                "label": label,
                "replicate": int(replicate),
                "value": float(value),
                "master_seed": self.master_seed,
            }
        )

    def add_summary(self, score: str, threshold_p: float, label: str, stat: str, value: float) -> None:
        self.summary.append(
            {
                "experiment": self.experiment,
                "score": score,
                "threshold_p": float(threshold_p),
                "label": label,
                "stat": stat,
                "value": float(value),
                "master_seed": self.master_seed,
            }
        )

    def add_row(self, table: str, row: dict[str, Any]) -> None:
        self.tables.setdefault(table, []).append(row)

    # --- views ------------------------------------------------------------
    def records_frame(self) -> pd.DataFrame:
        df = pd.DataFrame.from_records(self.records, columns=LONG_COLUMNS)
        return df.sort_values(LONG_COLUMNS[:5], kind="mergesort", ignore_index=True)

    def summary_frame(self) -> pd.DataFrame:
        df = pd.DataFrame.from_records(self.summary, columns=SUMMARY_COLUMNS)
        return df.sort_values(SUMMARY_COLUMNS[:5], kind="mergesort", ignore_index=True)

    def table_frame(self, name: str) -> pd.DataFrame:
        rows = self.tables.get(name, [])
        if not rows:
            return pd.DataFrame()
        df = pd.DataFrame.from_records(rows)
        return df.sort_values(list(df.columns), kind="mergesort", ignore_index=True)

    def stat(self, score: str, threshold_p: float, label: str, stat: str) -> float:
        """Look up one summary value; KeyError if absent."""
        for row in self.summary:
            if (
                row["score"] == score
                and row["label"] == label
                and row["stat"] == stat
                and (row["threshold_p"] == threshold_p)
            ):
                return row["value"]
        raise KeyError((score, threshold_p, label, stat))


class RunManifest(BaseModel):
    tool: str = "extremescore"
    version: str
    experiment: str
    master_seed: int
    config: dict[str, Any]
    inputs: dict[str, str] = Field(default_factory=dict)  # path -> sha256
    dropped_rows: int = 0
    outputs: list[str] = Field(default_factory=list)
    started_at: str
    finished_at: str


def tool_version() -> str:
    try:
        return metadata.version("extremescore")
    except metadata.PackageNotFoundError:
        from extremescore import __version__

        return __version__


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def json_safe(value: Any) -> Any:
    """Copy with non-finite floats spelled "inf", "-inf" or "nan"; plain JSON has no such numbers."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def emit_results(
    result: ExperimentResult,
    out_dir: str | Path,
    plots: bool = False,
    config: BaseModel | None = None,
    inputs: list[str | Path] | None = None,
    started_at: datetime | None = None,
) -> list[Path]:
    """Write CSVs, optional SVGs and the manifest; returns the paths written."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e}") from e
    started = started_at or datetime.now(timezone.utc)

    written: list[Path] = []
    _write_csv(result.records_frame(), out / "results.csv")
    written.append(out / "results.csv")
    _write_csv(result.summary_frame(), out / "summary.csv")
    written.append(out / "summary.csv")
    for name in sorted(result.tables):
        path = out / f"{name}.csv"
        _write_csv(result.table_frame(name), path)
        written.append(path)

    if plots:
        from extremescore.plots import render_figures

        written.extend(render_figures(result, out))

    manifest = RunManifest(
        version=tool_version(),
        experiment=result.experiment,
        master_seed=result.master_seed,
        config=json_safe(config.model_dump()) if config is not None else {},
        inputs={str(p): file_digest(p) for p in (inputs or [])},
        dropped_rows=result.dropped_rows,
        outputs=[p.name for p in written],
        started_at=started.isoformat(),
        finished_at=datetime.now(timezone.utc).isoformat(),
    )
    text = json.dumps(manifest.model_dump(mode="json"), indent=2, allow_nan=False)
    (out / "manifest.json").write_text(text + "\n")
    written.append(out / "manifest.json")
    logger.info("wrote %d files to %s", len(written), out)
    return written
