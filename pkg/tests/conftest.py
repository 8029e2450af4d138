import pytest
from src.params import ModelParams


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run stochastic ensembles and long sweeps")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numerical check")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def symmetric_params():
    """Narrow-band source at moderate occupation, small enough for dense solves."""
    return ModelParams(kappa=0.05, n_th=2.0)


@pytest.fixture
def markov_params():
    return ModelParams(kappa=10.0, n_th=1.0)
