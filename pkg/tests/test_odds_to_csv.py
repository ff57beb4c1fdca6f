"""
Tests for the ODDS .mat conversion script.
"""

import importlib.util
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from scipy.io import savemat

from src.data.csv_io import load_csv

SCRIPT = Path(__file__).resolve().parent.parent / "scripts" / "odds_to_csv.py"


@pytest.fixture(scope="module")
def odds_script():
    spec = importlib.util.spec_from_file_location("odds_to_csv", SCRIPT)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.fixture
def mat_file(temp_dir):
    path = Path(temp_dir) / "toy.mat"
    X = np.array([[1.0, 10.0], [3.0, 10.0], [2.0, 10.0]])
    savemat(str(path), {"X": X, "y": np.array([[0], [1], [0]])})
    return path


class TestOddsToCsv:
    """Test cases for the ODDS converter."""

    def test_convert(self, odds_script, mat_file, temp_dir):
        """Test features and labels survive conversion."""
        out = Path(temp_dir) / "toy.csv"
        result = CliRunner().invoke(odds_script.main, [str(mat_file), str(out)])
        assert result.exit_code == 0, result.output
        ds = load_csv(out, label_column="label")
        np.testing.assert_array_equal(ds.X[:, 0], [1.0, 3.0, 2.0])
        np.testing.assert_array_equal(ds.y, [0, 1, 0])

    def test_minmax(self, odds_script, mat_file):
        """Test min-max scaling maps varying columns to [0, 1] and constants to 0."""
        ds = odds_script.load_odds(mat_file, minmax=True)
        np.testing.assert_allclose(ds.X[:, 0], [0.0, 1.0, 0.5])
        np.testing.assert_array_equal(ds.X[:, 1], [0.0, 0.0, 0.0])

    def test_missing_arrays(self, odds_script, temp_dir):
        """Test a file without X and y is rejected."""
        path = Path(temp_dir) / "bad.mat"
        savemat(str(path), {"data": np.zeros((2, 2))})
        result = CliRunner().invoke(odds_script.main, [str(path), str(Path(temp_dir) / "o.csv")])
        assert result.exit_code == 1
