"""Shared fixtures and the --runslow switch for long statistical experiments."""

import numpy as np
import pytest

from blockpf.core.config import Settings
from blockpf.models.params import ExperimentConfig


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False,
        help="run slow statistical acceptance experiments",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def settings(tmp_path):
    """In-process settings writing under a temporary directory."""
    return Settings(WORKERS=1, OUTPUT_DIR=str(tmp_path / "results"), LOG_DIR=str(tmp_path / "logs"))


@pytest.fixture
def small_sweep():
    """A sweep small enough to run in well under a second."""
    return ExperimentConfig(
        name="small_sweep",
        model="lgss",
        mode="sweep",
        T=30,
        runs=3,
        seed=7,
        M_list=[8, 32],
        K_list=[3],
        W_list=[10],
        metrics=["pvalue", "corr", "mse_state", "rmse_kalman", "mean_M", "ab_gap"],
    )
