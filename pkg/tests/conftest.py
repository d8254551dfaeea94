import json

import numpy as np
import pytest

from core.experiments import ExperimentConfig, ExperimentRunner
from core.plugin_system.plugin_manager import PluginManager
from core.regression import RegressionManager

@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

@pytest.fixture
def plugin_manager(tmp_path):
    return PluginManager(tmp_path / "plugins")

@pytest.fixture
def regression(plugin_manager):
    return RegressionManager(plugin_manager)

@pytest.fixture
def runner(plugin_manager, regression):
    return ExperimentRunner(plugin_manager, regression)

def tiny_config_dict(output_dir, **changes) -> dict:
    """A 3-D synthetic scan small enough to run in well under a second."""
    data = {
        "data": {"synthetic": {"dimension": 3, "n_points": 80, "seed": 11}},
        "n_centers": 20,
        "l_grid": [0.3, 0.5, 0.8],
        "runs": 1,
        "seed": 7,
        "output_dir": str(output_dir),
    }
    data.update(changes)
    return data

@pytest.fixture
def make_config(tmp_path):
    def factory(**changes) -> ExperimentConfig:
        output_dir = changes.pop("output_dir", tmp_path / "results")
        return ExperimentConfig.from_dict(tiny_config_dict(output_dir, **changes))
    return factory

@pytest.fixture
def config_file(tmp_path):
    def factory(name="config.json", **changes):
        path = tmp_path / name
        path.write_text(json.dumps(tiny_config_dict("results", **changes)), encoding="utf-8")
        return path
    return factory
