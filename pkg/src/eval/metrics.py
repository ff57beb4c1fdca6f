"""
Detection metrics: confusion counts, F1 / G-measure and ROC curves traced by
sweeping the detector's contamination parameter.

Anomalies are the positive class throughout.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from sklearn.metrics import roc_auc_score

from ..data.datasets import Dataset
from ..detect.isolation_forest import IsolationForest
from ..exceptions import DegenerateLabelsError, DimensionMismatchError, InvalidLabelsError

logger = logging.getLogger(__name__)

DetectorFactory = Callable[[np.ndarray], IsolationForest]


class SweepGrid(BaseModel):
    """Contamination values start, start + step, ... up to stop (inclusive)."""

    start: float = Field(0.01, gt=0.0, lt=1.0)
    stop: float = Field(0.69, gt=0.0, lt=1.0)
    step: float = Field(0.04, gt=0.0)

    @model_validator(mode="after")
    def check_order(self):
        if self.start > self.stop:
            raise ValueError(f"grid start {self.start} exceeds stop {self.stop}")
        return self

    @classmethod
    def parse(cls, text: str) -> "SweepGrid":
        """Parse ``start:stop:step``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must look like start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        return cls(start=start, stop=stop, step=step)

    def values(self) -> List[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 10) for i in range(count)]

    def __str__(self) -> str:
        return f"{self.start:g}:{self.stop:g}:{self.step:g}"


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> Optional[float]:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> Optional[float]:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else 0.0

    @property
    def tpr(self) -> float:
        return self.recall or 0.0


@dataclass(frozen=True)
class SweepRow:
    contamination: float
    counts: Confusion

    def to_dict(self) -> Dict[str, Any]:
        c = self.counts
        return {
            "contamination": self.contamination,
            "tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn,
            "f1": f1(c.tp, c.fp, c.fn),
            "g_measure": g_measure(c.tp, c.fp, c.fn)
        }


def confusion(pred, true) -> Tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with label 1 = anomaly = positive."""
    pred = np.asarray(pred).reshape(-1)
    true = np.asarray(true).reshape(-1)
    if pred.shape != true.shape:
        raise DimensionMismatchError(f"{pred.size} predictions for {true.size} labels")
    for name, arr in (("predictions", pred), ("labels", true)):
        if not np.all((arr == 0) | (arr == 1)):
            raise InvalidLabelsError(f"{name} must be 0 or 1")
    pred = pred.astype(bool)
    true = true.astype(bool)
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    tn = int(np.sum(~pred & ~true))
    return tp, fp, fn, tn


def _precision_recall(tp: int, fp: int, fn: int) -> Optional[Tuple[float, float]]:
    if tp <= 0 or tp + fp == 0 or tp + fn == 0:
        return None
    return tp / (tp + fp), tp / (tp + fn)


def f1(tp: int, fp: int, fn: int) -> float:
    """Harmonic mean of precision and recall; 0 when either is undefined or zero."""
    pr = _precision_recall(tp, fp, fn)
    if pr is None:
        return 0.0
    p, r = pr
    return 2.0 * p * r / (p + r)


def g_measure(tp: int, fp: int, fn: int) -> float:
    """Geometric mean of precision and recall; 0 when either is undefined or zero."""
    pr = _precision_recall(tp, fp, fn)
    if pr is None:
        return 0.0
    p, r = pr
    return math.sqrt(p * r)


@dataclass
class RocCurve:
    """ROC points sorted by fpr with (0, 0) and (1, 1) included."""
    fpr: np.ndarray
    tpr: np.ndarray
    grid: Optional[SweepGrid] = None

    @classmethod
    def from_points(cls, points: Sequence[Tuple[float, float]], grid: Optional[SweepGrid] = None) -> "RocCurve":
        """Sort by (fpr, tpr), add the endpoints and make tpr non-decreasing."""
        pts = [(0.0, 0.0), *((float(f), float(t)) for f, t in points), (1.0, 1.0)]
        for f, t in pts:
            if not (0.0 <= f <= 1.0 and 0.0 <= t <= 1.0):
                raise ValueError(f"ROC point ({f}, {t}) outside the unit square")
        pts.sort()
        fpr = np.array([p[0] for p in pts])
        tpr = np.maximum.accumulate(np.array([p[1] for p in pts]))
        return cls(fpr, tpr, grid)

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    widths = np.diff(curve.fpr)
    heights = (curve.tpr[1:] + curve.tpr[:-1]) / 2.0
    return float(np.clip(np.sum(widths * heights), 0.0, 1.0))


def fpr_at_tpr(curve: RocCurve, tpr_target: float) -> float:
    """Smallest fpr reaching ``tpr_target``, interpolating between bracketing points."""
    if not 0.0 <= tpr_target <= 1.0:
        raise ValueError(f"tpr_target must lie in [0, 1], got {tpr_target}")
    if tpr_target > curve.tpr.max():
        raise ValueError(f"curve never reaches tpr {tpr_target} (max {curve.tpr.max()})")
    i = int(np.argmax(curve.tpr >= tpr_target))
    if i == 0 or curve.tpr[i] == tpr_target:
        return float(curve.fpr[i])
    t0, t1 = curve.tpr[i - 1], curve.tpr[i]
    f0, f1_ = curve.fpr[i - 1], curve.fpr[i]
    return float(f0 + (tpr_target - t0) / (t1 - t0) * (f1_ - f0))


def mann_whitney_auc(scores, labels) -> float:
    """Rank-based AUC straight from continuous scores."""
    return float(roc_auc_score(np.asarray(labels), np.asarray(scores)))


def _check_test_labels(test: Dataset):
    if test.y is None:
        raise DegenerateLabelsError(f"{test.name} has no labels")
    positives = test.n_anomalies
    if positives == 0 or positives == test.n_rows:
        raise DegenerateLabelsError(f"{test.name} needs both normal and anomalous rows for a ROC curve")


def sweep_forest(forest: IsolationForest, test: Dataset, grid: SweepGrid) -> List[SweepRow]:
    """Confusion counts on ``test`` at every contamination of ``grid``."""
    _check_test_labels(test)
    scores = forest.score_samples(test.X)
    rows = []
    for c in grid.values():
        pred = forest.predict_from_scores(scores, c)
        rows.append(SweepRow(c, Confusion(*confusion(pred, test.y))))
    return rows


def curve_from_sweep(rows: Sequence[SweepRow], grid: Optional[SweepGrid] = None) -> RocCurve:
    return RocCurve.from_points([(r.counts.fpr, r.counts.tpr) for r in rows], grid)


def roc_from_sweep(detector_fit: DetectorFactory, train, test: Dataset, grid: SweepGrid) -> RocCurve:
    """Fit once on ``train`` and trace the ROC on ``test`` across ``grid``."""
    _check_test_labels(test)
    forest = detector_fit(getattr(train, "X", train))
    return curve_from_sweep(sweep_forest(forest, test, grid), grid)


@dataclass
class MetricReport:
    """Summary of one contamination sweep."""
    auc: float
    best_f1: float
    best_contamination: float
    g_measure: float
    fpr_at_tpr: Optional[Tuple[float, float]]
    sweep: List[SweepRow] = field(default_factory=list)
    mann_whitney_auc: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "auc": self.auc,
            "best_f1": self.best_f1,
            "best_contamination": self.best_contamination,
            "g_measure": self.g_measure,
            "fpr_at_tpr": None if self.fpr_at_tpr is None else {
                "tpr": self.fpr_at_tpr[0], "fpr": self.fpr_at_tpr[1]
            },
            "mann_whitney_auc": self.mann_whitney_auc,
            "sweep": [row.to_dict() for row in self.sweep]
        }


def report_from_sweep(
    rows: Sequence[SweepRow],
    grid: Optional[SweepGrid] = None,
    tpr_target: Optional[float] = 0.8,
    oracle_auc: Optional[float] = None
) -> MetricReport:
    """AUC, best F1 over the grid and the G-measure at that grid point."""
    curve = curve_from_sweep(rows, grid)
    f1s = [f1(r.counts.tp, r.counts.fp, r.counts.fn) for r in rows]
    best = int(np.argmax(f1s))
    best_row = rows[best]
    at_tpr = None
    if tpr_target is not None:
        at_tpr = (tpr_target, fpr_at_tpr(curve, tpr_target))
    return MetricReport(
        auc=auc(curve),
        best_f1=f1s[best],
        best_contamination=best_row.contamination,
        g_measure=g_measure(best_row.counts.tp, best_row.counts.fp, best_row.counts.fn),
        fpr_at_tpr=at_tpr,
        sweep=list(rows),
        mann_whitney_auc=oracle_auc
    )


def evaluate_forest(
    forest: IsolationForest,
    test: Dataset,
    grid: SweepGrid,
    tpr_target: Optional[float] = 0.8
) -> MetricReport:
    """Full MetricReport for a fitted forest, with the rank-based AUC alongside."""
    rows = sweep_forest(forest, test, grid)
    oracle = mann_whitney_auc(forest.score_samples(test.X), test.y)
    report = report_from_sweep(rows, grid, tpr_target, oracle)
    logger.debug(f"Sweep over {len(rows)} contaminations: AUC {report.auc:.4f}, best F1 {report.best_f1:.4f}")
    return report
