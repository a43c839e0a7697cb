import json
import math

import pandas as pd
import pytest

from extremescore.config import build_config
from extremescore.experiments import run_experiment
from extremescore.results import LONG_COLUMNS, SUMMARY_COLUMNS, ExperimentResult, emit_results, file_digest


def test_empty_result_writes_headers_only(tmp_path):
    result = ExperimentResult(experiment="StationEval", master_seed=0)
    emit_results(result, tmp_path)
    assert (tmp_path / "results.csv").read_text() == ",".join(LONG_COLUMNS) + "\n"
    assert (tmp_path / "summary.csv").read_text() == ",".join(SUMMARY_COLUMNS) + "\n"


def test_records_are_sorted_and_full_precision(tmp_path):
    result = ExperimentResult(experiment="ScaleThreshold", master_seed=3)
    result.add("wCRPS", 0.9, "sigma=2", 0, 1.0 / 3.0)
    result.add("wCRPS", -math.inf, "sigma=1", 0, 0.1)
    result.add("CRPS", 0.5, "sigma=1", 0, -2.0)
    emit_results(result, tmp_path)
    df = pd.read_csv(tmp_path / "results.csv")
    assert df["score"].tolist() == ["CRPS", "wCRPS", "wCRPS"]
    assert df["threshold_p"].iloc[1] == -math.inf
    assert df["value"].iloc[2] == 1.0 / 3.0


def test_stat_lookup():
    result = ExperimentResult(experiment="LakesSim", master_seed=1)
    result.add_summary("swCRPS", 0.9, "ab=2-4", "proportion", 0.5)
    assert result.stat("swCRPS", 0.9, "ab=2-4", "proportion") == 0.5
    with pytest.raises(KeyError):
        result.stat("swCRPS", 0.5, "ab=2-4", "proportion")


def test_manifest_records_config_and_inputs(tmp_path, write_file):
    data = write_file("in.csv", "station_id,year,value\n")
    cfg = build_config({"experiment": "LakesSim", "master_seed": 5})
    result = ExperimentResult(experiment="LakesSim", master_seed=5, dropped_rows=2)
    written = emit_results(result, tmp_path / "out", config=cfg, inputs=[data])
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["master_seed"] == 5
    assert manifest["config"]["k"] == 1.5
    assert manifest["inputs"] == {str(data): file_digest(data)}
    assert manifest["dropped_rows"] == 2
    assert manifest["outputs"] == ["results.csv", "summary.csv"]
    assert written[-1].name == "manifest.json"


def test_rerun_is_byte_identical(tmp_path):
    cfg = build_config(
        {"experiment": "ScaleThreshold", "master_seed": 9, "n_draws": 200, "sigma_grid": "1, 2"}
    )
    for name, threads in (("a", 1), ("b", 2)):
        result, _ = run_experiment(cfg, threads)
        emit_results(result, tmp_path / name, plots=True, config=cfg)
    for fname in ("results.csv", "summary.csv", "scale_threshold.svg"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()
    assert (tmp_path / "a" / "scale_threshold.svg").read_text().lstrip().startswith("<?xml")


def test_manifest_spells_infinite_thresholds(tmp_path):
    cfg = build_config({"experiment": "LakesSim", "master_seed": 5})
    emit_results(ExperimentResult(experiment="LakesSim", master_seed=5), tmp_path, config=cfg)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["threshold_p"] == ["-inf", 0.5, 0.9]
    again = build_config(manifest["config"])
    assert again.threshold_p == cfg.threshold_p
    assert again.model_dump() == cfg.model_dump()
