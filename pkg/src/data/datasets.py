"""
Datasets, the synthetic benchmark generators and split policies.

Synthetic variants (95% normal / 5% anomalous by default):
  a: normal N(0, 10^2 I) in 2-D, anomalies N([30, 0], 5^2 I)
  b: the same in 3-D, anomalies centred at [30, 0, 0]
  c: normal ring with radius ~ N(30, 5) truncated at 0, anomalies N(0, 5^2 I) inside it
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import DegenerateLabelsError, InvalidLabelsError, NonFiniteError

logger = logging.getLogger(__name__)

SYNTHETIC_VARIANTS = ("a", "b", "c")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class Dataset:
    """Feature matrix with optional binary labels (0 normal, 1 anomaly)."""
    X: np.ndarray
    y: Optional[np.ndarray] = None
    name: str = "dataset"

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise NonFiniteError(f"{self.name}: features must be finite")
        if self.y is not None:
            self.y = np.asarray(self.y).reshape(-1).astype(np.int64)
            if self.y.shape[0] != self.X.shape[0]:
                raise InvalidLabelsError(f"{self.name}: {self.y.shape[0]} labels for {self.X.shape[0]} rows")
            if not np.all((self.y == 0) | (self.y == 1)):
                raise InvalidLabelsError(f"{self.name}: labels must be 0 or 1")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_anomalies(self) -> int:
        return 0 if self.y is None else int(self.y.sum())

    def subset(self, idx: np.ndarray, name: Optional[str] = None) -> "Dataset":
        return Dataset(
            self.X[idx],
            None if self.y is None else self.y[idx],
            name or self.name
        )

    def normal_only(self) -> "Dataset":
        if self.y is None:
            raise DegenerateLabelsError(f"{self.name} has no labels")
        return self.subset(np.flatnonzero(self.y == 0))

    def to_dict(self) -> Dict[str, Any]:
        """Summary used in manifests and reports."""
        return {
            "name": self.name,
            "rows": self.n_rows,
            "features": self.n_features,
            "anomalies": None if self.y is None else self.n_anomalies
        }


@dataclass(frozen=True)
class SyntheticSpec:
    """Which synthetic benchmark to draw and how much of it."""
    variant: str = "a"
    n_train: int = 1000
    n_test: int = 1000
    contamination: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "variant", self.variant.lower())
        if self.variant not in SYNTHETIC_VARIANTS:
            raise ValueError(f"Unknown synthetic dataset {self.variant!r}; choose from {SYNTHETIC_VARIANTS}")
        if self.n_train < 20 or self.n_test < 20:
            raise ValueError("synthetic datasets need at least 20 rows per split")
        if not 0.0 < self.contamination < 1.0:
            raise ValueError("contamination must lie in (0, 1)")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "contamination": self.contamination
        }


def _ring(n: int, mean_radius: float, std_radius: float, rng: np.random.Generator) -> np.ndarray:
    radius = rng.normal(mean_radius, std_radius, size=n)
    # truncate at zero by redrawing
    while np.any(radius < 0):
        bad = radius < 0
        radius[bad] = rng.normal(mean_radius, std_radius, size=int(bad.sum()))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def _draw_split(variant: str, n: int, contamination: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    n_anomalous = round_half_up(contamination * n)
    n_normal = n - n_anomalous

    if variant == "a":
        normal = rng.normal(0.0, 10.0, size=(n_normal, 2))
        anomalous = rng.normal([30.0, 0.0], 5.0, size=(n_anomalous, 2))
    elif variant == "b":
        normal = rng.normal(0.0, 10.0, size=(n_normal, 3))
        anomalous = rng.normal([30.0, 0.0, 0.0], 5.0, size=(n_anomalous, 3))
    else:
        normal = _ring(n_normal, 30.0, 5.0, rng)
        anomalous = rng.normal(0.0, 5.0, size=(n_anomalous, 2))

    X = np.vstack([normal, anomalous])
    y = np.concatenate([np.zeros(n_normal, dtype=np.int64), np.ones(n_anomalous, dtype=np.int64)])
    order = rng.permutation(n)
    return X[order], y[order]


def gen_synthetic(spec: SyntheticSpec, seed: int) -> Tuple[Dataset, Dataset]:
    """Draw labeled train and test splits from independent sub-streams of ``seed``."""
    train_seq, test_seq = np.random.SeedSequence(int(seed)).spawn(2)
    X_train, y_train = _draw_split(spec.variant, spec.n_train, spec.contamination, np.random.default_rng(train_seq))
    X_test, y_test = _draw_split(spec.variant, spec.n_test, spec.contamination, np.random.default_rng(test_seq))

    name = f"synthetic_{spec.variant}"
    train = Dataset(X_train, y_train, f"{name}_train")
    test = Dataset(X_test, y_test, f"{name}_test")
    logger.info(
        f"🎲 Generated dataset {spec.variant.upper()} (seed={seed}): "
        f"train {train.n_rows} rows / {train.n_anomalies} anomalies, "
        f"test {test.n_rows} rows / {test.n_anomalies} anomalies"
    )
    return train, test


def split_clean(ds: Dataset, train_fraction: float = 0.5, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Random split; anomalies are dropped from the train half only."""
    if ds.y is None:
        raise DegenerateLabelsError(f"{ds.name}: clean split needs labels")
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must lie in (0, 1]")

    order = np.random.default_rng(int(seed)).permutation(ds.n_rows)
    n_train = round_half_up(train_fraction * ds.n_rows)
    train_idx, test_idx = order[:n_train], order[n_train:]
    if test_idx.size == 0:
        raise DegenerateLabelsError(f"{ds.name}: train_fraction={train_fraction} leaves an empty test split")

    train_idx = train_idx[ds.y[train_idx] == 0]
    if train_idx.size == 0:
        raise DegenerateLabelsError(f"{ds.name}: no normal rows in the training split")

    train = ds.subset(np.sort(train_idx), f"{ds.name}_train")
    test = ds.subset(np.sort(test_idx), f"{ds.name}_test")
    if test.n_anomalies == 0:
        logger.warning(f"{test.name} holds no anomalies; recall will be undefined")
    logger.info(f"✂️  Clean split of {ds.name}: train {train.n_rows} normal rows, test {test.n_rows} rows")
    return train, test
