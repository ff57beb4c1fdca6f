"""
Experiment drivers: the latent-magnitude sweep, the augmenter comparison and
the prior comparison.

Work is split into one job per seed. A job trains its own AAE, then evaluates
every cell (radius or method) of that seed against the same detector seed, so
cells differ only by their training data. Each stochastic stage draws from a
generator derived from (seed, stage key), which keeps results identical for
any ``jobs`` value and any completion order.
"""

import logging
import re
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..aae.model import AaeModel, AaeSetup
from ..aae.priors import GaussianPrior, GeneralizedGaussianPrior, Prior
from ..augment.augmenters import (
    AugmenterKind, Doping, MagnitudeSampling, NoAugmentation, decode_magnitude, doping, synthesize
)
from ..data.datasets import Dataset, round_half_up
from ..detect.isolation_forest import DetectorConfig
from ..exceptions import EmptyEdgeSetError
from ..nn.rng import make_rng
from .metrics import MetricReport, SweepGrid, evaluate_forest

logger = logging.getLogger(__name__)

BASELINE = "none"
EDGE = "edge"

_N_SYNTH_PATTERN = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*%\s*$")


def resolve_n_synth(spec: Union[int, str], n_train: int) -> int:
    """``"10%"`` resolves against the training size (half-up); integers pass through."""
    if isinstance(spec, int):
        count = spec
    else:
        match = _N_SYNTH_PATTERN.match(str(spec))
        if match:
            count = round_half_up(float(match.group(1)) / 100.0 * n_train)
        else:
            try:
                count = int(str(spec).strip())
            except ValueError:
                raise ValueError(f"n_synth must be an integer or a percentage like '10%', got {spec!r}") from None
    if count < 0:
        raise ValueError(f"n_synth must be >= 0, got {count}")
    return count


def parse_radii(text: str) -> List[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0 or start <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(count)]
        radii = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValueError(f"radii must look like 5:100:5 or 5,10,20 with positive values, got {text!r}") from None
    if not radii or any(r <= 0 for r in radii):
        raise ValueError(f"radii must be positive, got {text!r}")
    return radii


@dataclass
class CellResult:
    """One (label, seed) evaluation."""
    label: str
    seed: int
    order: int
    report: MetricReport
    n_synth: int = 0

    @property
    def radius(self) -> Optional[float]:
        try:
            return float(self.label)
        except ValueError:
            return None


@dataclass
class ExperimentResult:
    """Cells of one experiment, kept sorted by (label order, seed)."""
    experiment: str
    cells: List[CellResult] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.cells.sort(key=lambda c: (c.order, c.seed))

    def labels(self) -> List[str]:
        seen = []
        for cell in self.cells:
            if cell.label not in seen:
                seen.append(cell.label)
        return seen

    def by_label(self, label: str) -> List[CellResult]:
        return [c for c in self.cells if c.label == label]

    def mean_auc(self, label: str) -> float:
        return float(np.mean([c.report.auc for c in self.by_label(label)]))

    def stats(self) -> Dict[str, Dict[str, float]]:
        """Mean and sample std per label of AUC, best F1 and G-measure."""
        out = {}
        for label in self.labels():
            cells = self.by_label(label)
            entry: Dict[str, float] = {"n": len(cells)}
            for metric in ("auc", "best_f1", "g_measure"):
                values = [getattr(c.report, metric) for c in cells]
                entry[f"{metric}_mean"] = float(np.mean(values))
                entry[f"{metric}_std"] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            fprs = [c.report.fpr_at_tpr[1] for c in cells if c.report.fpr_at_tpr is not None]
            if fprs:
                entry["fpr_at_tpr_mean"] = float(np.mean(fprs))
            out[label] = entry
        return out

    def best_radius(self) -> Tuple[float, float]:
        """(radius, mean AUC) of the best magnitude row."""
        radii = [label for label in self.labels() if self.by_label(label)[0].radius is not None]
        if not radii:
            raise ValueError(f"{self.experiment} holds no magnitude rows")
        best = max(radii, key=self.mean_auc)
        return float(best), self.mean_auc(best)


@dataclass(frozen=True)
class _SeedJob:
    seed: int
    train: Dataset
    test: Dataset
    setup: Optional[AaeSetup]
    detector: DetectorConfig
    grid: SweepGrid
    tpr_target: Optional[float]
    n_synth: int
    radii: Tuple[float, ...] = ()
    methods: Tuple[AugmenterKind, ...] = ()
    include_edge: bool = True


def _evaluate(job: _SeedJob, X_train: np.ndarray) -> MetricReport:
    forest = job.detector.fit(X_train, make_rng(job.seed, "detector"))
    return evaluate_forest(forest, job.test, job.grid, job.tpr_target)


def _with_synthetic(X: np.ndarray, synthetic: np.ndarray) -> np.ndarray:
    return np.vstack([X, synthetic]) if synthetic.shape[0] else X


def _magnitude_seed(job: _SeedJob) -> List[CellResult]:
    X = job.train.X
    model = job.setup.train(job.train, job.seed)
    cells = [CellResult(BASELINE, job.seed, 0, _evaluate(job, X))]

    for order, radius in enumerate(job.radii, start=1):
        synthetic = decode_magnitude(model, radius, job.n_synth, make_rng(job.seed, "magnitude", radius))
        report = _evaluate(job, _with_synthetic(X, synthetic))
        cells.append(CellResult(f"{radius:g}", job.seed, order, report, job.n_synth))

    if job.include_edge:
        try:
            synthetic = doping(model, X, job.n_synth, make_rng(job.seed, "edge"))
            report = _evaluate(job, _with_synthetic(X, synthetic))
            cells.append(CellResult(EDGE, job.seed, len(job.radii) + 1, report, job.n_synth))
        except EmptyEdgeSetError as e:
            logger.warning(f"Seed {job.seed}: skipping edge-based row ({e})")
    return cells


def _needs_model(method: AugmenterKind) -> bool:
    return isinstance(method, (Doping, MagnitudeSampling))


def _compare_seed(job: _SeedJob) -> List[CellResult]:
    X = job.train.X
    model: Optional[AaeModel] = None
    if any(_needs_model(m) for m in job.methods):
        model = job.setup.train(job.train, job.seed)

    cells = []
    for order, method in enumerate(job.methods):
        label = _method_label(method)
        n = 0 if isinstance(method, NoAugmentation) else job.n_synth
        synthetic = synthesize(X, method, n, make_rng(job.seed, "augment", label), model)
        cells.append(CellResult(label, job.seed, order, _evaluate(job, _with_synthetic(X, synthetic)), n))
    return cells


def _method_label(method: AugmenterKind) -> str:
    if isinstance(method, MagnitudeSampling):
        return f"magnitude:{method.radius:g}"
    return method.name


def _run_jobs(fn: Callable[[_SeedJob], List[CellResult]], jobs: Sequence[_SeedJob], n_jobs: int, desc: str) -> List[CellResult]:
    """Run seed jobs sequentially or on a process pool; order of completion does not matter."""
    cells: List[CellResult] = []
    if n_jobs <= 1 or len(jobs) <= 1:
        for job in tqdm(jobs, desc=desc, leave=False, disable=len(jobs) <= 1):
            cells.extend(fn(job))
        return cells

    with ProcessPoolExecutor(max_workers=min(n_jobs, len(jobs))) as pool:
        futures = {pool.submit(fn, job): job.seed for job in jobs}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc, leave=False):
            seed = futures[future]
            try:
                cells.extend(future.result())
            except Exception as e:
                logger.error(f"Failed to run seed {seed}: {e}")
                raise
    return cells


def magnitude_sweep_experiment(
    train: Dataset,
    test: Dataset,
    setup: AaeSetup,
    radii: Sequence[float],
    n_synth: int,
    detector: DetectorConfig,
    seeds: Sequence[int],
    grid: Optional[SweepGrid] = None,
    tpr_target: Optional[float] = 0.8,
    include_edge: bool = True,
    jobs: int = 1
) -> ExperimentResult:
    """AUC per decoded-magnitude radius, with the no-augmentation and edge-based rows."""
    grid = grid or SweepGrid()
    if not seeds:
        raise ValueError("at least one seed is required")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    try:
        logger.info(
            f"📈 Magnitude sweep: {len(radii)} radii x {len(seeds)} seeds, "
            f"{n_synth} synthetic rows per cell"
        )
        seed_jobs = [
            _SeedJob(int(s), train, test, setup, detector, grid, tpr_target, n_synth,
                     radii=tuple(float(r) for r in radii), include_edge=include_edge)
            for s in seeds
        ]
        cells = _run_jobs(_magnitude_seed, seed_jobs, jobs, "Magnitude sweep")
        result = ExperimentResult("magnitude_sweep", cells, {
            "radii": [float(r) for r in radii],
            "n_synth": n_synth,
            "seeds": [int(s) for s in seeds],
            "grid": grid.model_dump(),
            "detector": detector.model_dump(),
            "aae": setup.config.model_dump(exclude={"progress"}),
            "prior": setup.prior.to_dict()
        })
        best_r, best_auc = result.best_radius()
        logger.info(
            f"✅ Magnitude sweep done: baseline AUC {result.mean_auc(BASELINE):.4f}, "
            f"best radius {best_r:g} with AUC {best_auc:.4f}"
        )
        return result

    except Exception as e:
        logger.error(f"Failed to run magnitude sweep: {e}")
        raise


def compare_augmenters(
    train: Dataset,
    test: Dataset,
    methods: Sequence[AugmenterKind],
    n_synth: Union[int, str],
    detector: DetectorConfig,
    seeds: Sequence[int],
    setup: Optional[AaeSetup] = None,
    grid: Optional[SweepGrid] = None,
    tpr_target: Optional[float] = 0.8,
    jobs: int = 1
) -> ExperimentResult:
    """AUC, best F1 and G-measure per augmentation method over seeds.

    ``n_synth`` may be a percentage of the training size ("10%").
    """
    grid = grid or SweepGrid()
    if not methods:
        raise ValueError("at least one augmentation method is required")
    if not seeds:
        raise ValueError("at least one seed is required")
    if setup is None and any(_needs_model(m) for m in methods):
        raise ValueError("DOPING and magnitude augmentation need an AAE setup")
    count = resolve_n_synth(n_synth, train.n_rows)
    try:
        logger.info(
            f"⚖️  Comparing {', '.join(_method_label(m) for m in methods)} over {len(seeds)} seeds "
            f"({count} synthetic rows)"
        )
        seed_jobs = [
            _SeedJob(int(s), train, test, setup, detector, grid, tpr_target, count, methods=tuple(methods))
            for s in seeds
        ]
        cells = _run_jobs(_compare_seed, seed_jobs, jobs, "Comparing augmenters")
        config: Dict[str, Any] = {
            "methods": [_method_label(m) for m in methods],
            "n_synth": count,
            "seeds": [int(s) for s in seeds],
            "grid": grid.model_dump(),
            "detector": detector.model_dump()
        }
        if setup is not None:
            config["aae"] = setup.config.model_dump(exclude={"progress"})
            config["prior"] = setup.prior.to_dict()
        return ExperimentResult("compare_augmenters", cells, config)

    except Exception as e:
        logger.error(f"Failed to compare augmenters: {e}")
        raise


def default_prior_family(alpha: float = 10.0, mu: float = 0.0) -> List[Tuple[str, Prior]]:
    """Generalized Gaussians with beta in {0.5, 1, 2, 3} plus 2-D and 8-D Gaussians."""
    family: List[Tuple[str, Prior]] = [
        (f"gg_beta{beta:g}", GeneralizedGaussianPrior(2, mu=mu, alpha=alpha, beta=beta))
        for beta in (0.5, 1.0, 2.0, 3.0)
    ]
    family.append(("gaussian_2d", GaussianPrior(2, (10.0,))))
    family.append(("gaussian_8d", GaussianPrior(8, (10.0,))))
    return family


@dataclass
class PriorComparisonRow:
    name: str
    prior: Dict[str, Any]
    best_radius: float
    best_auc: float
    baseline_auc: float
    edge_auc: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "prior": self.prior,
            "best_radius": self.best_radius,
            "best_auc": self.best_auc,
            "baseline_auc": self.baseline_auc,
            "edge_auc": self.edge_auc
        }


def prior_comparison_experiment(
    train: Dataset,
    test: Dataset,
    setup: AaeSetup,
    priors: Sequence[Tuple[str, Prior]],
    radii: Sequence[float],
    n_synth: int,
    detector: DetectorConfig,
    seeds: Sequence[int],
    grid: Optional[SweepGrid] = None,
    tpr_target: Optional[float] = 0.8,
    jobs: int = 1
) -> Tuple[List[PriorComparisonRow], List[ExperimentResult]]:
    """Run the magnitude sweep once per prior and report where each one peaks."""
    rows, sweeps = [], []
    for name, prior in priors:
        config = setup.config.model_copy(update={"latent_dim": prior.dim})
        anomaly_prior = setup.anomaly_prior
        if anomaly_prior is not None and anomaly_prior.dim != prior.dim:
            anomaly_prior = replace(anomaly_prior, dim=prior.dim)
        logger.info(f"🔬 Prior {name}: {prior.to_dict()}")
        sweep = magnitude_sweep_experiment(
            train, test, AaeSetup(config, prior, anomaly_prior), radii, n_synth,
            detector, seeds, grid, tpr_target, include_edge=True, jobs=jobs
        )
        best_r, best_auc = sweep.best_radius()
        edge_auc = sweep.mean_auc(EDGE) if sweep.by_label(EDGE) else None
        rows.append(PriorComparisonRow(name, prior.to_dict(), best_r, best_auc, sweep.mean_auc(BASELINE), edge_auc))
        sweeps.append(sweep)
    return rows, sweeps
