"""Isolation Forest anomaly detector.

Each tree isolates a psi-row subsample with random axis-aligned splits up to
height ceil(log2 psi). The anomaly score is s(x) = 2^(-E[h(x)] / c(psi)),
where h(x) is the path length plus the c(size) correction at the external
node, so higher means more anomalous. Predictions threshold scores at a
quantile of the training scores set by ``contamination``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from ..data.datasets import round_half_up
from ..exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649


@dataclass
class ExternalNode:
    """Leaf holding the number of subsample rows that reached it (may be 0)."""
    size: int


@dataclass
class InternalNode:
    """Rows with x[split_feature] < split_value go left."""
    split_feature: int
    split_value: float
    left: "ITreeNode"
    right: "ITreeNode"


ITreeNode = Union[InternalNode, ExternalNode]


def average_path_length(m) -> np.ndarray:
    """c(m) = 2 H(m - 1) - 2 (m - 1) / m with H(i) = ln i + gamma; c(m) = 0 for m <= 1."""
    m = np.asarray(m, dtype=np.float64)
    out = np.zeros_like(m)
    big = m > 1
    mb = m[big]
    out[big] = 2.0 * (np.log(mb - 1.0) + EULER_GAMMA) - 2.0 * (mb - 1.0) / mb
    return out


def _c(m: int) -> float:
    return float(average_path_length(np.array([m]))[0])


def _build_tree(X: np.ndarray, depth: int, height_limit: int, rng: np.random.Generator) -> ITreeNode:
    n = X.shape[0]
    if depth >= height_limit or n <= 1:
        return ExternalNode(n)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    varying = np.flatnonzero(hi > lo)
    if varying.size == 0:
        return ExternalNode(n)
    feature = int(varying[rng.integers(varying.size)])
    value = float(rng.uniform(lo[feature], hi[feature]))
    goes_left = X[:, feature] < value
    return InternalNode(
        feature,
        value,
        _build_tree(X[goes_left], depth + 1, height_limit, rng),
        _build_tree(X[~goes_left], depth + 1, height_limit, rng)
    )


def _accumulate_paths(node: ITreeNode, X: np.ndarray, idx: np.ndarray, depth: int, out: np.ndarray):
    if idx.size == 0:
        return
    if isinstance(node, ExternalNode):
        out[idx] += depth + _c(node.size)
        return
    goes_left = X[idx, node.split_feature] < node.split_value
    _accumulate_paths(node.left, X, idx[goes_left], depth + 1, out)
    _accumulate_paths(node.right, X, idx[~goes_left], depth + 1, out)


def tree_depth(node: ITreeNode) -> int:
    if isinstance(node, ExternalNode):
        return 0
    return 1 + max(tree_depth(node.left), tree_depth(node.right))


class IsolationForest:
    """Isolation Forest with contamination-threshold prediction.

    Attributes:
        n_trees: Number of isolation trees.
        psi: Subsample size per tree (clamped to the training size at fit time).
        trees_: Root nodes (set after fit).
        height_limit_: ceil(log2 psi) (set after fit).
        train_scores_: Sorted anomaly scores of the training rows (set after fit).
    """

    def __init__(self, n_trees: int = 100, psi: Optional[int] = 256) -> None:
        if n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {n_trees}")
        if psi is not None and psi < 2:
            raise ValueError(f"psi must be >= 2, got {psi}")
        self.n_trees = n_trees
        self.psi = psi

        # Set after fit()
        self.trees_: List[ITreeNode] = []
        self.height_limit_: int = 0
        self.n_features_: int = 0
        self.train_scores_: Optional[np.ndarray] = None

    def fit(self, X: np.ndarray, rng: np.random.Generator) -> IsolationForest:
        """Grow the trees on random subsamples of X and cache training scores.

        Every tree draws from its own seed, taken from ``rng`` up front, so
        trees are independent of build order.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"Expected 2D array, got shape {X.shape}")
        n_samples = X.shape[0]
        if n_samples < 2:
            raise ValueError(f"Need at least 2 training samples, got {n_samples}")

        psi = min(256, n_samples) if self.psi is None else self.psi
        if psi > n_samples:
            warnings.warn(f"psi={psi} exceeds the {n_samples} training rows; clamping to {n_samples}")
            logger.warning(f"Clamped psi from {psi} to {n_samples}")
            psi = n_samples
        self.psi = psi
        self.height_limit_ = int(math.ceil(math.log2(psi)))
        self.n_features_ = X.shape[1]

        tree_seeds = rng.integers(0, 2**63 - 1, size=self.n_trees)
        self.trees_ = []
        for seed in tree_seeds:
            tree_rng = np.random.default_rng(int(seed))
            rows = tree_rng.choice(n_samples, size=psi, replace=False)
            self.trees_.append(_build_tree(X[rows], 0, self.height_limit_, tree_rng))

        self.train_scores_ = np.sort(self.score_samples(X))
        logger.debug(
            f"Fitted IsolationForest: {self.n_trees} trees, psi={psi}, "
            f"height limit {self.height_limit_}, n_train={n_samples}"
        )
        return self

    def _check_fitted(self):
        if self.train_scores_ is None:
            raise RuntimeError("Detector has not been fitted. Call fit() first.")

    def expected_path_length(self, X: np.ndarray) -> np.ndarray:
        """Mean adjusted path length over trees."""
        if not self.trees_:
            raise RuntimeError("Detector has not been fitted. Call fit() first.")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_:
            raise DimensionMismatchError(
                f"Expected {self.n_features_} features, got shape {X.shape}"
            )
        totals = np.zeros(X.shape[0])
        all_rows = np.arange(X.shape[0])
        for tree in self.trees_:
            _accumulate_paths(tree, X, all_rows, 0, totals)
        return totals / len(self.trees_)

    def score_samples(self, X: np.ndarray) -> np.ndarray:
        """Anomaly scores in (0, 1); higher = more anomalous."""
        return np.power(2.0, -self.expected_path_length(X) / _c(self.psi))

    def threshold(self, contamination: float) -> float:
        """Training-score quantile: with m = round(c * n) the (n - m)-th smallest score."""
        self._check_fitted()
        if not 0.0 < contamination < 1.0:
            raise ValueError(f"contamination must lie in (0, 1), got {contamination}")
        n = self.train_scores_.size
        m = min(round_half_up(contamination * n), n - 1)
        return float(self.train_scores_[n - m - 1])

    def predict_from_scores(self, scores: np.ndarray, contamination: float) -> np.ndarray:
        return (np.asarray(scores) > self.threshold(contamination)).astype(np.int64)

    def predict(self, X: np.ndarray, contamination: float) -> np.ndarray:
        """Binary labels, 1 = anomaly."""
        return self.predict_from_scores(self.score_samples(X), contamination)


def fit(X: np.ndarray, n_trees: int = 100, psi: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> IsolationForest:
    """Fit a forest; psi defaults to min(256, |X|)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    return IsolationForest(n_trees=n_trees, psi=psi).fit(X, rng)


def score(forest: IsolationForest, x: np.ndarray) -> float:
    """Anomaly score of a single point."""
    return float(forest.score_samples(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def predict(forest: IsolationForest, X: np.ndarray, contamination: float) -> np.ndarray:
    return forest.predict(X, contamination)


class DetectorConfig(BaseModel):
    """Forest size used by the experiment drivers; psi is capped at the training size."""

    n_trees: int = Field(100, ge=1)
    psi: int = Field(256, ge=2)

    def fit(self, X: np.ndarray, rng: np.random.Generator) -> IsolationForest:
        X = np.asarray(X, dtype=np.float64)
        return IsolationForest(self.n_trees, min(self.psi, max(X.shape[0], 2))).fit(X, rng)
