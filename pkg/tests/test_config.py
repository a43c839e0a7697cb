import math

import pytest

from extremescore.config import build_config, parse_config, read_config_file, runtime_settings
from extremescore.errors import ConfigError


def test_defaults_are_filled_in(write_file):
    path = write_file("scale.env", "# sweep\nexperiment = ScaleThreshold\nmaster_seed = 42\nn_draws = 500\n")
    cfg = parse_config(path)
    assert cfg.n_draws == 500
    assert cfg.sigma_grid == [1.0, 2.0, 4.0, 8.0]
    assert cfg.threshold_p[0] == -math.inf
    assert cfg.gamma == 0.12


def test_lists_and_overrides(write_file):
    path = write_file("b.env", "experiment = Benchmark\nmaster_seed = 1\nnu_list = 1.1, 1.8\n")
    cfg = parse_config(path, overrides={"master_seed": 9, "n_replicates": None})
    assert cfg.nu_list == [1.1, 1.8]
    assert cfg.master_seed == 9
    assert cfg.n_replicates == 1000


def test_threshold_probability_out_of_range():
    with pytest.raises(ConfigError, match="threshold"):
        build_config({"experiment": "ScaleThreshold", "master_seed": 1, "threshold_p": "0.5, 1.2"})


def test_missing_seed_and_unknown_key():
    with pytest.raises(ConfigError, match="missing required key 'master_seed'"):
        build_config({"experiment": "Benchmark"})
    with pytest.raises(ConfigError, match="unknown key 'colour'"):
        build_config({"experiment": "Benchmark", "master_seed": 1, "colour": "red"})


def test_unknown_score_and_bad_trend_model():
    with pytest.raises(ConfigError):
        build_config({"experiment": "Benchmark", "master_seed": 1, "score_set": "CRPS, Brier"})
    with pytest.raises(ConfigError):
        build_config({"experiment": "PermTrend", "master_seed": 1, "model": "gumbel"})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        read_config_file(tmp_path / "nope.env")


def test_runtime_settings(monkeypatch):
    monkeypatch.setenv("EXTREMESCORE_THREADS", "3")
    monkeypatch.setenv("EXTREMESCORE_LOG_LEVEL", "debug")
    s = runtime_settings()
    assert (s.threads, s.log_level) == (3, "DEBUG")
    monkeypatch.setenv("EXTREMESCORE_THREADS", "many")
    with pytest.raises(ConfigError):
        runtime_settings()
