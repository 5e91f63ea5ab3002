import json
import math
import os

import numpy as np
import pytest

from billiard_lab.calculations.dynamics import tolerances
from billiard_lab.calculations.geometry import (Disc, build_disc, build_drivebelt, build_semidispersing,
                                                build_stadium, build_symmetric_flower, build_truncated_stadium)
from billiard_lab.utils.config import load_settings

INSTANCE = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "instance")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the statistical acceptance checks with desk-scale budgets")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def lab_settings(request):
    """
    Low budgets of config_test.json for ordinary tests, config_base.json for slow ones.
    """
    filename = "config_base.json" if "slow" in request.keywords else "config_test.json"
    config = load_settings(INSTANCE, filename)
    tolerances.cache_clear()
    yield config
    tolerances.cache_clear()


@pytest.fixture
def test_instance(tmp_path):
    """
    Instance directory whose config_base.json holds the test settings, for the command line.
    """
    directory = tmp_path / "instance"
    directory.mkdir()
    with open(os.path.join(INSTANCE, "config_test.json"), "r", encoding="UTF-8") as f:
        settings = json.load(f)
    with open(directory / "config_base.json", "w", encoding="UTF-8") as f:
        json.dump(settings, f)
    return str(directory)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def disc():
    return build_disc(1.0)


@pytest.fixture
def stadium():
    return build_stadium(2.0, 1.0)


@pytest.fixture
def drivebelt():
    return build_drivebelt(1.0, 0.5, 2.0)


@pytest.fixture
def truncated():
    return build_truncated_stadium(2.0, 1.0, 0.8)


@pytest.fixture
def flower():
    return build_symmetric_flower(3, 0.8 * math.pi)


@pytest.fixture
def semidispersing():
    return build_semidispersing(1.0, 1.0, [Disc((0.5, 0.5), 0.25)])
