"""
Shared fixtures and the --runslow switch for statistical acceptance runs
"""
import pytest

from conflict_network.models import GamePayoffs, SimConfig
from conflict_network.services import EngineService
from tests.helpers import paradoxical_learners


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def conflict_game() -> GamePayoffs:
    return GamePayoffs(x1=0.2, y1=0.6, x2=0.2, y2=0.6)


@pytest.fixture
def small_config(conflict_game) -> SimConfig:
    return SimConfig(n=20, payoffs=conflict_game, delta=0.01, epsilon=0.01, seed=7, rounds=50, snapshot_every=10)


@pytest.fixture
def locked_paradoxical(monkeypatch):
    """Every run starts from learners that can only reach the Paradoxical convention"""
    monkeypatch.setattr(EngineService, "init_population", staticmethod(paradoxical_learners))
