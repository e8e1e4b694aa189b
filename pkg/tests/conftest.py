"""
Shared fixtures for the gdefinetti test suite.

Provides seeded generators, random contraction matrices, a clean
configuration and container for every test, and a Click runner for the
command-line tests.
"""

import numpy as np
import pytest
from click.testing import CliRunner

from gdefinetti.core.coherent import LambdaMatrix
from gdefinetti.core.config import config
from gdefinetti.core.container import reset_container
from gdefinetti.enhancements.logging import clear_context


def random_lambda(rng: np.random.Generator, max_norm: float = 0.5) -> LambdaMatrix:
    """Random 2x2 complex matrix rescaled to spectral norm in (0, max_norm]."""
    raw = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    scale = max_norm * rng.uniform(0.05, 1.0) / np.linalg.norm(raw, 2)
    return LambdaMatrix(raw * scale)


@pytest.fixture(autouse=True)
def clean_state(monkeypatch):
    """Isolate every test from environment settings and global singletons."""
    for key in ("GDF_SEED", "GDF_THREADS", "GDF_BATCHES", "GDF_CONFIG_FILE", "GDF_LOG_LEVEL",
                "GDF_LOG_FORMAT", "GDF_LOG_FILE", "GDF_JSON_LOGS"):
        monkeypatch.delenv(key, raising=False)
    config.reset()
    reset_container()
    clear_context()
    yield
    config.reset()
    reset_container()
    clear_context()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def lambda_factory(rng):
    """Callable producing random contractions from the seeded generator."""
    def factory(max_norm: float = 0.5) -> LambdaMatrix:
        return random_lambda(rng, max_norm)
    return factory


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def small_batches():
    """Keep Monte-Carlo tests quick."""
    config.set("batches", 8)
    config.set("chunk_size", 5000)
    return config


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="acceptance-scale test; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
