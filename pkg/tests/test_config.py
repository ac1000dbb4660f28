"""Tests for settings, schemas, recipe loading, logging and the CLI."""

import json
import logging
from pathlib import Path

import pytest
from pydantic import ValidationError

from blockpf.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from blockpf.core.config import Settings
from blockpf.core.exceptions import ConfigError
from blockpf.models.params import AdaptMethod, AdaptPolicy, ExperimentConfig, ExperimentMode, ModelName
from blockpf.utils.config_loader import list_experiments, load_experiment, parse_recipe
from blockpf.utils.logger import ContextFilter, add_context_to_logger, get_logger, setup_logging

EXPERIMENTS_DIR = Path(__file__).resolve().parent.parent / "config" / "experiments"

TINY_RECIPE = """\
# tiny sweep
name=tiny
description="Tiny LGSS sweep"
model=lgss
model.a=0.5
mode=sweep
T=20
runs=2
seed=11
M_list=8,16
K_list=3
W_list=10
metrics=pvalue,mean_M
"""


@pytest.fixture
def recipe(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_RECIPE, encoding="utf-8")
    return path


def test_settings_defaults():
    settings = Settings()
    assert settings.WORKERS >= 1
    assert settings.parallel == (settings.WORKERS > 1)


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("BLOCKPF_WORKERS", "4")
    monkeypatch.setenv("BLOCKPF_LOG_LEVEL", "debug")
    settings = Settings()
    assert settings.WORKERS == 4 and settings.parallel
    assert settings.LOG_LEVEL == "DEBUG"


def test_settings_validation():
    with pytest.raises(ValidationError):
        Settings(LOG_LEVEL="LOUD")
    with pytest.raises(ValidationError):
        Settings(WORKERS=0)


def test_policy_validation():
    with pytest.raises(ValidationError):
        AdaptPolicy(M_min=100, M_max=10)
    with pytest.raises(ValidationError):
        AdaptPolicy(p_low=0.7, p_high=0.6)
    with pytest.raises(ValidationError):
        AdaptPolicy(scale=1.0)
    with pytest.raises(ValidationError):
        AdaptPolicy(method=AdaptMethod.SCHEDULED)
    assert AdaptPolicy(W=30).window_length(4) == 30
    assert AdaptPolicy(M_min=16, M_max=64).clamp(3) == 16


def test_experiment_config_parsing():
    config = ExperimentConfig(
        model="growth2", mode="two_phase", T=100, M_pairs="50:1000, 200:4000", K_list="1",
    )
    assert config.M_pairs == [(50, 1000), (200, 4000)]
    assert config.K_list == [1]
    assert config.resolved_metrics == ["mse_m1", "mse_m2", "mse_switch"]
    assert config.model_params().sigma_v == 0.1


@pytest.mark.parametrize("kwargs", [
    dict(model="lgss", mode="sweep", T=10),
    dict(model="lgss", mode="sweep", T=0, M_list="4"),
    dict(model="lgss", mode="sweep", T=10, M_list="0,4"),
    dict(model="lgss", mode="adaptive", T=10),
    dict(model="lgss", mode="two_phase", T=10),
    dict(model="lgss", mode="sweep", T=10, M_list="4", metrics="mse_m1"),
    dict(model="growth1", mode="sweep", T=10, M_list="4", metrics="rmse_kalman"),
    dict(model="growth1", mode="sweep", T=10, M_list="4", model_overrides={"rho": 1.0}),
    dict(model="nope", mode="sweep", T=10, M_list="4"),
    dict(model="lgss", mode="sweep", T=10, M_list="4", metrics="M_series"),
    dict(model="lgss", mode="sweep", T=10, M_list="4", b_bins=1),
])
def test_experiment_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        ExperimentConfig(**kwargs)


def test_parse_recipe_model_overrides():
    data = parse_recipe({"model": "lgss", "model.a": "0.5", "T": "10"})
    assert data["model_overrides"] == {"a": 0.5}
    with pytest.raises(ConfigError):
        parse_recipe({"colour": "blue"})
    with pytest.raises(ConfigError):
        parse_recipe({"model.a": "fast"})
    with pytest.raises(ConfigError):
        parse_recipe({"model": None})


def test_load_experiment(recipe):
    config = load_experiment(recipe)
    assert config.name == "tiny"
    assert config.model == ModelName.LGSS and config.mode == ExperimentMode.SWEEP
    assert config.model_params().a == 0.5
    assert config.M_list == [8, 16]
    assert config.metrics == ["pvalue", "mean_M"]


def test_load_experiment_overrides(recipe, monkeypatch):
    monkeypatch.setenv("BLOCKPF_RUNS", "5")
    monkeypatch.setenv("BLOCKPF_SEED", "99")
    config = load_experiment(recipe)
    assert (config.runs, config.seed) == (5, 99)
    config = load_experiment(recipe, {"runs": 7, "seed": None})
    assert (config.runs, config.seed) == (7, 99)


def test_load_experiment_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_experiment(tmp_path / "missing.cfg")
    bad = tmp_path / "bad.cfg"
    bad.write_text("model=lgss\nmode=sweep\nT=-1\nM_list=4\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_experiment(bad)


def test_shipped_recipes_load():
    found = {name: path for name, _, path in list_experiments(EXPERIMENTS_DIR)}
    assert {"fig1", "fig2", "fig3", "fig4", "table2", "table3", "table4", "table5", "table6", "table7", "oracle_rate"} <= set(found)
    assert load_experiment(found["table6"]).model_params().sigma_v == 0.1
    assert load_experiment(found["table5"]).M_pairs == [(100, 1000), (1000, 10000)]
    assert load_experiment(found["fig2"]).b_bins == 20
    assert load_experiment(found["fig3"]).resolved_metrics == ["M_series", "mean_M_last"]
    assert load_experiment(found["table3"]).M0_list == [16, 128, 1024]


def test_get_logger_namespace():
    assert get_logger("cli").name == "blockpf.cli"
    assert get_logger("blockpf.services.bpf").name == "blockpf.services.bpf"


def test_context_filter_sets_attributes():
    record = logging.LogRecord("blockpf", logging.INFO, __file__, 1, "msg", None, None)
    assert ContextFilter({"experiment": "table2"}).filter(record)
    assert record.experiment == "table2"


def test_json_logging_carries_context(tmp_path):
    setup_logging(log_level="INFO", log_dir=str(tmp_path), log_to_file=True, log_to_console=False, json_format=True)
    logger = logging.getLogger("blockpf")
    context = add_context_to_logger(logger, experiment="table5", seed=3)
    logger.info("hello")
    logger.removeFilter(context)
    for handler in logger.handlers:
        handler.flush()
    record = json.loads((tmp_path / "blockpf.log").read_text(encoding="utf-8").strip().splitlines()[-1])
    assert record["message"] == "hello"
    assert record["experiment"] == "table5" and record["seed"] == 3


def test_cli_describe(recipe, capsys):
    assert main(["describe", "--config", str(recipe)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "name: tiny" in out
    assert "M=16 K=3 W=10" in out
    assert "rows: 6" in out


def test_cli_run(recipe, tmp_path, capsys):
    out_path = tmp_path / "out" / "tiny.csv"
    assert main(["run", "--config", str(recipe), "--runs", "1", "--seed", "4", "--out", str(out_path)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == str(out_path)
    lines = out_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "model,M,K,W,metric,value,stderr,runs,seed"
    assert len(lines) == 1 + 2 * 3
    assert all(line.endswith(",4") for line in lines[1:])


def test_cli_list(capsys):
    assert main(["list-experiments", "--dir", str(EXPERIMENTS_DIR)]) == EXIT_OK
    assert "table3" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    assert main(["describe", "--config", str(tmp_path / "missing.cfg")]) == EXIT_IO
    bad = tmp_path / "bad.cfg"
    bad.write_text("model=lgss\nmode=sweep\nT=10\n", encoding="utf-8")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG
