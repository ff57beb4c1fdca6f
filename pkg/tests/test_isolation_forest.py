"""
Tests for the Isolation Forest detector.
"""

import numpy as np
import pytest

from src.detect.isolation_forest import (
    DetectorConfig, ExternalNode, IsolationForest, average_path_length, fit, predict, score,
    tree_depth
)
from src.eval.metrics import SweepGrid, evaluate_forest, mann_whitney_auc
from src.exceptions import DimensionMismatchError
from src.nn.rng import make_rng


class TestAveragePathLength:
    """Test cases for the c(m) normalizer."""

    def test_known_values(self):
        """Test c(2) and the zero cases."""
        assert average_path_length(2) == pytest.approx(0.15443, abs=1e-5)
        assert average_path_length(1) == 0.0
        assert average_path_length(0) == 0.0

    def test_vectorized_and_increasing(self):
        """Test c grows with m."""
        values = average_path_length(np.arange(2, 300))
        assert np.all(np.diff(values) > 0)


class TestFit:
    """Test cases for IsolationForest.fit."""

    def test_two_points(self):
        """Test two distinct points with psi=2 isolate at depth 1 in every tree."""
        forest = fit(np.array([[0.0], [1.0]]), n_trees=20, psi=2, rng=make_rng(0, "forest"))
        assert forest.height_limit_ == 1
        assert all(tree_depth(tree) == 1 for tree in forest.trees_)
        scores = forest.score_samples(np.array([[0.0], [1.0]]))
        assert scores[0] == scores[1]

    def test_constant_data(self):
        """Test constant rows give one leaf per tree and equal scores."""
        X = np.full((50, 3), 4.0)
        forest = fit(X, n_trees=10, rng=make_rng(0, "forest"))
        assert all(isinstance(tree, ExternalNode) for tree in forest.trees_)
        scores = forest.score_samples(X)
        assert np.all(scores == scores[0])

    def test_obvious_outlier(self):
        """Test 100 scores highest among {0, ..., 9, 100}."""
        X = np.array([[float(v)] for v in list(range(10)) + [100]])
        forest = fit(X, rng=make_rng(0, "forest"))
        scores = forest.score_samples(X)
        assert np.argmax(scores) == 10

    def test_psi_defaults_and_clamp(self):
        """Test psi defaults to min(256, n) and larger values are clamped with a warning."""
        X = make_rng(1, "data").normal(size=(40, 2))
        assert fit(X, n_trees=2, rng=make_rng(0, "forest")).psi == 40
        with pytest.warns(UserWarning):
            forest = IsolationForest(n_trees=2, psi=256).fit(X, make_rng(0, "forest"))
        assert forest.psi == 40
        assert forest.height_limit_ == 6

    def test_too_few_rows(self):
        """Test fewer than two rows raises."""
        with pytest.raises(ValueError):
            fit(np.array([[1.0, 2.0]]))

    def test_invalid_parameters(self):
        """Test n_trees and psi bounds."""
        with pytest.raises(ValueError):
            IsolationForest(n_trees=0)
        with pytest.raises(ValueError):
            IsolationForest(psi=1)

    def test_deterministic(self, dataset_a):
        """Test equal rng streams give equal scores."""
        train, test = dataset_a
        first = fit(train.X, rng=make_rng(5, "detector")).score_samples(test.X)
        second = fit(train.X, rng=make_rng(5, "detector")).score_samples(test.X)
        np.testing.assert_array_equal(first, second)

    def test_detector_config_caps_psi(self):
        """Test DetectorConfig fits small data without warnings."""
        X = make_rng(1, "data").normal(size=(30, 2))
        forest = DetectorConfig(n_trees=5).fit(X, make_rng(0, "forest"))
        assert forest.psi == 30


class TestScoring:
    """Test cases for scores and predictions."""

    @pytest.fixture
    def forest_and_data(self):
        X = make_rng(3, "data").normal(size=(300, 2))
        return fit(X, rng=make_rng(3, "forest")), X

    def test_score_range_and_formula(self, forest_and_data):
        """Test scores lie in (0, 1) and equal 2^(-E[h] / c(psi))."""
        forest, X = forest_and_data
        scores = forest.score_samples(X)
        assert np.all((scores > 0.0) & (scores < 1.0))
        expected = np.power(2.0, -forest.expected_path_length(X) / average_path_length(forest.psi))
        np.testing.assert_allclose(scores, expected, rtol=1e-12)

    def test_half_at_average_path(self):
        """Test a path length equal to c(psi) scores exactly 0.5."""
        c = average_path_length(256)
        assert np.power(2.0, -c / c) == 0.5

    def test_single_point_score(self, forest_and_data):
        """Test score() agrees with score_samples."""
        forest, X = forest_and_data
        assert score(forest, X[0]) == pytest.approx(forest.score_samples(X[:1])[0])

    def test_dimension_mismatch(self, forest_and_data):
        """Test scoring rows of the wrong width raises."""
        forest, _ = forest_and_data
        with pytest.raises(DimensionMismatchError):
            forest.score_samples(np.zeros((3, 5)))

    def test_training_flag_count(self, forest_and_data):
        """Test about c * n training rows are flagged."""
        forest, X = forest_and_data
        for c in (0.05, 0.1, 0.25):
            flagged = int(predict(forest, X, c).sum())
            m = round(c * X.shape[0])
            assert m - 5 <= flagged <= m

    def test_tiny_contamination(self, forest_and_data):
        """Test a contamination rounding to zero flags nothing in training."""
        forest, X = forest_and_data
        assert predict(forest, X, 0.001).sum() == 0

    def test_flags_nested(self, forest_and_data):
        """Test flagged sets grow with contamination."""
        forest, X = forest_and_data
        previous = np.zeros(X.shape[0], dtype=bool)
        for c in np.arange(0.01, 0.7, 0.04):
            flags = predict(forest, X, float(c)).astype(bool)
            assert np.all(flags[previous])
            previous = flags

    def test_contamination_range(self, forest_and_data):
        """Test contamination outside (0, 1) raises."""
        forest, X = forest_and_data
        with pytest.raises(ValueError):
            forest.predict(X, 0.0)
        with pytest.raises(ValueError):
            forest.predict(X, 1.0)

    def test_unfitted(self):
        """Test scoring before fit raises."""
        with pytest.raises(RuntimeError):
            IsolationForest().score_samples(np.zeros((2, 2)))

    def test_affine_invariance(self):
        """Test scaling and shifting the data leaves the scores unchanged."""
        X = make_rng(6, "data").normal(size=(200, 1))
        original = fit(X, rng=make_rng(6, "forest")).score_samples(X)
        moved = fit(3.0 * X + 5.0, rng=make_rng(6, "forest")).score_samples(3.0 * X + 5.0)
        np.testing.assert_allclose(original, moved, rtol=1e-12)


class TestDatasetA:
    """Test cases for detection quality on Dataset A."""

    def test_recall(self, dataset_a):
        """Test recall above 0.5 at the true contamination for forests fit on the normal rows."""
        train, test = dataset_a
        clean = train.normal_only().X
        recalls = []
        for seed in range(5):
            flags = fit(clean, rng=make_rng(seed, "detector")).predict(test.X, 0.05)
            recalls.append(flags[test.y == 1].mean())
        assert np.mean(recalls) > 0.5
        assert min(recalls) > 0.5

    @pytest.mark.slow
    def test_mean_auc(self, dataset_a):
        """Test mean AUC above 0.90 over five seeds."""
        train, test = dataset_a
        aucs = [
            evaluate_forest(fit(train.X, rng=make_rng(seed, "detector")), test, SweepGrid()).auc
            for seed in range(1, 6)
        ]
        assert np.mean(aucs) > 0.90

    @pytest.mark.slow
    def test_close_to_distance_oracle(self, dataset_a):
        """Test the forest lands within 0.1 AUC of a distance-to-normal-mean scorer above 0.95."""
        train, test = dataset_a
        centre = train.normal_only().X.mean(axis=0)
        oracle = mann_whitney_auc(np.linalg.norm(test.X - centre, axis=1), test.y)
        assert oracle > 0.95
        aucs = [
            evaluate_forest(fit(train.X, rng=make_rng(seed, "detector")), test, SweepGrid()).auc
            for seed in range(1, 6)
        ]
        assert np.mean(aucs) >= oracle - 0.1
