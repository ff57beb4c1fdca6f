"""
Pytest configuration and fixtures for testing.
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.aae.model import AaeTrainConfig, train_unlabeled
from src.aae.priors import GaussianPrior
from src.data.csv_io import write_csv
from src.data.datasets import Dataset, SyntheticSpec, gen_synthetic
from src.nn.rng import make_rng


@pytest.fixture
def temp_dir():
    """Create a temporary directory for testing."""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture
def rng():
    """Seeded generator; each test gets a fresh stream."""
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def dataset_a():
    """Dataset A train/test pair at the default size."""
    return gen_synthetic(SyntheticSpec("a"), seed=7)


@pytest.fixture
def small_split():
    """Small Dataset A pair, quick enough for CLI and pipeline tests."""
    return gen_synthetic(SyntheticSpec("a", n_train=200, n_test=200), seed=11)


@pytest.fixture
def small_train_config():
    """Tiny AAE configuration for fast, deterministic training."""
    return AaeTrainConfig(steps=60, batch_size=50, hidden_units=16, seed=3)


@pytest.fixture(scope="session")
def tiny_model():
    """Briefly trained unlabeled AAE on a small Dataset A split (shared across tests)."""
    train, _ = gen_synthetic(SyntheticSpec("a", n_train=200, n_test=20), seed=5)
    cfg = AaeTrainConfig(steps=150, batch_size=50, hidden_units=16, seed=1)
    model = train_unlabeled(train, cfg, GaussianPrior(2, (10.0,)), make_rng(1, "aae"))
    return model, train


@pytest.fixture
def csv_pair(temp_dir, small_split):
    """train.csv / test.csv of the small split, with label columns."""
    train, test = small_split
    train_path = write_csv(train, Path(temp_dir) / "train.csv")
    test_path = write_csv(test, Path(temp_dir) / "test.csv")
    return str(train_path), str(test_path)


@pytest.fixture
def unit_square_data(rng):
    """Features in [0, 1] for the random-noise baseline."""
    return Dataset(rng.random((50, 6)), name="unit_square")
