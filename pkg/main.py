#!/usr/bin/env python3
"""
DOPING - Main Application
CLI for generating benchmark data, training the adversarial autoencoder,
synthesizing infrequent normal samples and evaluating Isolation Forest.
"""

import functools
import json
import logging
from pathlib import Path
from typing import List, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from src import __version__
from src.aae.model import AaeModel, encode
from src.aae.serialization import load_model, save_model
from src.augment.augmenters import AUGMENTER_NAMES, decode_rings, doping_details, parse_augmenter
from src.config.settings import RunConfig, load_run_config, settings
from src.data.csv_io import (
    LABEL_COLUMN, atomic_write_text, feature_header, format_float, load_csv, read_header,
    write_csv, write_matrix, write_rows
)
from src.data.datasets import Dataset, SyntheticSpec, gen_synthetic, split_clean
from src.eval.experiments import (
    ExperimentResult, compare_augmenters, default_prior_family, magnitude_sweep_experiment,
    parse_radii, prior_comparison_experiment, resolve_n_synth
)
from src.eval.metrics import SweepGrid
from src.eval.reporting import report_writer
from src.exceptions import DopingError
from src.nn.rng import make_rng

# Data goes to files; everything human-readable goes to stderr
console = Console(stderr=True)

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False):
    """Setup logging configuration."""
    log_level = logging.DEBUG if verbose else getattr(logging, settings.log_level)

    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)]
    )
    logging.getLogger().setLevel(log_level)


def handle_errors(command):
    """Map domain, I/O and validation failures to exit code 1."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except click.ClickException:
            raise
        except (DopingError, OSError, ValueError) as e:
            logger.error(f"{command.__name__.replace('_', '-')} failed: {e}")
            raise click.ClickException(str(e)) from e
    return wrapper


def _parse_seeds(ctx, param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        seeds = [int(s) for s in value.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")
    if not seeds:
        raise click.BadParameter("at least one seed is required")
    return seeds


def _parse_radii(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return parse_radii(value)
    except ValueError as e:
        raise click.BadParameter(str(e))


def _parse_grid(ctx, param, value: Optional[str]) -> Optional[SweepGrid]:
    if value is None:
        return None
    try:
        return SweepGrid.parse(value)
    except ValueError as e:
        raise click.BadParameter(str(e))


def _check_n_synth(ctx, param, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    try:
        resolve_n_synth(value, 100)
    except ValueError as e:
        raise click.BadParameter(str(e))
    return value


def _load_features(path: str, label_column: str = LABEL_COLUMN, require_labels: bool = False) -> Dataset:
    """Load a CSV, splitting out the label column when present."""
    has_labels = label_column in read_header(path)
    if require_labels and not has_labels:
        raise click.ClickException(f"{path} has no label column {label_column!r}")
    return load_csv(path, label_column if has_labels else None)


def _run_config(ctx: click.Context, **overrides) -> RunConfig:
    return ctx.obj["config"].with_overrides(overrides)


def _display_stats(result: ExperimentResult, title: str, label_header: str):
    table = Table(title=title)
    table.add_column(label_header, style="cyan")
    table.add_column("Seeds", style="dim")
    table.add_column("AUC", style="magenta")
    table.add_column("Best F1", style="yellow")
    table.add_column("G-measure", style="green")
    for label, entry in result.stats().items():
        table.add_row(
            label,
            str(entry["n"]),
            f"{entry['auc_mean']:.4f} ± {entry['auc_std']:.4f}",
            f"{entry['best_f1_mean']:.4f} ± {entry['best_f1_std']:.4f}",
            f"{entry['g_measure_mean']:.4f} ± {entry['g_measure_std']:.4f}"
        )
    console.print(table)


@click.group()
@click.version_option(__version__)
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.option('--config', '-c', type=click.Path(exists=True, dir_okay=False), envvar='DOPING_CONFIG',
              help='Run configuration (JSON)')
@click.option('--jobs', '-j', type=click.IntRange(min=1), default=None, help='Parallel seed jobs')
@click.pass_context
def cli(ctx: click.Context, verbose: bool, config: Optional[str], jobs: Optional[int]):
    """DOPING - generative data augmentation for unsupervised anomaly detection."""
    setup_logging(verbose)
    ctx.ensure_object(dict)
    config = config or settings.config
    try:
        ctx.obj["config"] = load_run_config(config)
    except DopingError as e:
        raise click.ClickException(str(e)) from e
    if config:
        logger.debug(f"📁 Loaded configuration from: {config}")
    ctx.obj["jobs"] = jobs or settings.jobs


@cli.command()
@click.option('--dataset', '-d', type=click.Choice(['a', 'b', 'c'], case_sensitive=False), required=True,
              help='Synthetic benchmark variant')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', '-o', 'out_dir', type=click.Path(file_okay=False), required=True, help='Output directory')
@click.option('--n-train', type=click.IntRange(min=20), default=1000, show_default=True)
@click.option('--n-test', type=click.IntRange(min=20), default=1000, show_default=True)
@click.option('--contamination', type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.05,
              show_default=True)
@handle_errors
def gen(dataset: str, seed: int, out_dir: str, n_train: int, n_test: int, contamination: float):
    """Generate a synthetic train/test pair plus a manifest."""
    spec = SyntheticSpec(dataset, n_train, n_test, contamination)
    train, test = gen_synthetic(spec, seed)

    out = Path(out_dir)
    write_csv(train, out / "train.csv")
    write_csv(test, out / "test.csv")
    manifest = {
        "spec": spec.to_dict(),
        "seed": seed,
        "train": {**train.to_dict(), "file": "train.csv"},
        "test": {**test.to_dict(), "file": "test.csv"}
    }
    atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    console.print(f"✅ Dataset {dataset.upper()} written to {out}")


@cli.command()
@click.argument('data_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', 'out_dir', type=click.Path(file_okay=False), required=True, help='Output directory')
@click.option('--train-fraction', type=click.FloatRange(0, 1, min_open=True), default=0.5, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--label-column', default=LABEL_COLUMN, show_default=True)
@handle_errors
def split(data_csv: str, out_dir: str, train_fraction: float, seed: int, label_column: str):
    """Clean split of a labeled dataset: anomalies are removed from the training half."""
    ds = _load_features(data_csv, label_column, require_labels=True)
    train, test = split_clean(ds, train_fraction, seed)
    out = Path(out_dir)
    write_csv(train, out / "train.csv")
    write_csv(test, out / "test.csv")
    console.print(f"✅ Split written to {out}: train {train.n_rows} rows, test {test.n_rows} rows")


@cli.command('train-aae')
@click.argument('train_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--model-out', '-m', type=click.Path(dir_okay=False), required=True, help='Model file to write')
@click.option('--labeled', is_flag=True, help='Feed labels to the discriminator (ring prior for anomalies)')
@click.option('--label-column', default=LABEL_COLUMN, show_default=True)
@click.option('--steps', type=click.IntRange(min=1), default=None, help='Training steps')
@click.option('--epochs', type=click.IntRange(min=1), default=None, help='Training epochs (overrides steps)')
@click.option('--seed', type=int, default=None, help='Training seed')
@click.option('--latent-out', type=click.Path(dir_okay=False), default=None, help='Also write E(X) as CSV')
@click.option('--progress/--no-progress', default=False, help='Show a progress bar')
@click.pass_context
@handle_errors
def train_aae(
    ctx: click.Context,
    train_csv: str,
    model_out: str,
    labeled: bool,
    label_column: str,
    steps: Optional[int],
    epochs: Optional[int],
    seed: Optional[int],
    latent_out: Optional[str],
    progress: bool
):
    """Train an adversarial autoencoder on a training CSV."""
    config = _run_config(ctx, **{
        "aae.steps": steps, "aae.epochs": epochs, "aae.seed": seed, "aae.labeled": labeled or None
    })
    train = _load_features(train_csv, label_column, require_labels=config.aae.labeled)
    model: AaeModel = config.aae.setup(progress).train(train)

    save_model(model, model_out)
    if latent_out:
        write_matrix(latent_out, encode(model, train.X), prefix="z")

    table = Table(title="AAE Training Summary")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    table.add_row("Rows", str(train.n_rows))
    table.add_row("Input / latent dim", f"{model.input_dim} / {model.latent_dim}")
    table.add_row("Prior", model.prior.kind)
    table.add_row("Labeled", str(model.labeled))
    table.add_row("Steps", str(len(model.history.reconstruction)))
    table.add_row("Final reconstruction MSE", f"{model.history.reconstruction[-1]:.5f}")
    console.print(table)
    console.print(f"✅ Model saved: {model_out}")


@cli.command()
@click.option('--model', '-m', 'model_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.argument('train_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--k', '-k', type=click.IntRange(min=0), required=True, help='Samples to synthesize')
@click.option('--out', '-o', type=click.Path(dir_okay=False), required=True, help='Synthetic CSV to write')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--radius', type=click.FloatRange(min=0, min_open=True), multiple=True,
              help='Decode k samples per latent radius instead of edge-based sampling (repeatable)')
@handle_errors
def doping(model_path: str, train_csv: str, k: int, out: str, seed: int, radius: tuple):
    """Synthesize infrequent normal samples with a trained AAE."""
    model = load_model(model_path)
    if radius:
        samples = decode_rings(model, radius, k, make_rng(seed, "rings"))
        header = feature_header(model.input_dim) + ["radius"]
        write_rows(out, header, ([format_float(v) for v in row] for row in samples))
        console.print(f"✅ {samples.shape[0]} decoded samples at radii {list(radius)} written to {out}")
        return

    train = _load_features(train_csv)
    result = doping_details(model, train.X, k, make_rng(seed, "doping"))
    write_matrix(out, result.samples)
    if result.edge_params is not None:
        console.print(
            f"🎯 Edge band {result.edge_params.alpha:.3f} < ||z|| < {result.edge_params.beta:.3f} "
            f"({result.edge_indices.size} latents)"
        )
    console.print(f"✅ {result.samples.shape[0]} synthetic samples written to {out}")


@cli.command()
@click.argument('train_csv', type=click.Path(exists=True, dir_okay=False))
@click.argument('test_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--radii', callback=_parse_radii, default=None, help='start:stop:step or a list (e.g. 5:100:5)')
@click.option('--seeds', callback=_parse_seeds, default=None, help='Comma-separated seeds')
@click.option('--n-synth', callback=_check_n_synth, default=None, help='Synthetic rows per cell (int or "10%")')
@click.option('--grid', callback=_parse_grid, default=None, help='Contamination grid start:stop:step')
@click.option('--steps', type=click.IntRange(min=1), default=None, help='AAE training steps')
@click.option('--no-edge', is_flag=True, help='Skip the edge-based row')
@click.option('--out', '-o', type=click.Path(dir_okay=False), required=True, help='radius,seed,auc CSV')
@click.option('--summary', type=click.Path(dir_okay=False), default=None, help='JSON summary')
@click.pass_context
@handle_errors
def sweep(
    ctx: click.Context,
    train_csv: str,
    test_csv: str,
    radii: Optional[List[float]],
    seeds: Optional[List[int]],
    n_synth: Optional[str],
    grid: Optional[SweepGrid],
    steps: Optional[int],
    no_edge: bool,
    out: str,
    summary: Optional[str]
):
    """Magnitude sweep: AUC against the l2-norm of decoded latent samples."""
    config = _run_config(ctx, **{"aae.steps": steps, "augment.n_synth": n_synth})
    train = _load_features(train_csv)
    test = _load_features(test_csv, require_labels=True)
    result = magnitude_sweep_experiment(
        train, test,
        config.aae.setup(),
        radii or config.sweep.radii_values(),
        resolve_n_synth(config.augment.n_synth, train.n_rows),
        config.detector,
        seeds or config.sweep.seeds,
        grid or config.sweep.grid,
        config.sweep.tpr_target,
        include_edge=not no_edge,
        jobs=ctx.obj["jobs"]
    )
    report_writer.write_sweep_cells(result, out)
    if summary:
        report_writer.create_summary_report(result, summary)
    _display_stats(result, "Magnitude Sweep", "Radius")
    best_radius, best_auc = result.best_radius()
    console.print(f"🏆 Best radius {best_radius:g} (mean AUC {best_auc:.4f})")


@cli.command('eval')
@click.argument('train_csv', type=click.Path(exists=True, dir_okay=False))
@click.argument('test_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--augment', '-a', 'method', default=None,
              help=f"Augmentation: {', '.join(AUGMENTER_NAMES)} or magnitude:<r>")
@click.option('--n-synth', callback=_check_n_synth, default=None, help='Synthetic rows (int or "10%")')
@click.option('--seed', type=int, default=None, help='Run seed (default: first configured seed)')
@click.option('--grid', callback=_parse_grid, default=None, help='Contamination grid start:stop:step')
@click.option('--steps', type=click.IntRange(min=1), default=None, help='AAE training steps')
@click.option('--report', '-r', type=click.Path(dir_okay=False), required=True, help='MetricReport JSON')
@click.pass_context
@handle_errors
def evaluate(
    ctx: click.Context,
    train_csv: str,
    test_csv: str,
    method: Optional[str],
    n_synth: Optional[str],
    seed: Optional[int],
    grid: Optional[SweepGrid],
    steps: Optional[int],
    report: str
):
    """Evaluate Isolation Forest on the (optionally augmented) training set."""
    if method is not None:
        try:
            parse_augmenter(method)
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--augment")
    config = _run_config(ctx, **{
        "aae.steps": steps, "augment.method": method, "augment.n_synth": n_synth
    })
    train = _load_features(train_csv)
    test = _load_features(test_csv, require_labels=True)
    run_seed = seed if seed is not None else config.sweep.seeds[0]
    grid = grid or config.sweep.grid

    result = compare_augmenters(
        train, test, [config.augment.augmenter()], config.augment.n_synth, config.detector,
        [run_seed], config.aae.setup(), grid, config.sweep.tpr_target
    )
    cell = result.cells[0]
    context = {**result.config, "method": cell.label, "seed": run_seed}
    report_writer.write_metric_report(cell.report, report, context)

    table = Table(title=f"Metric Report ({cell.label})")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")
    table.add_row("Synthetic rows", str(cell.n_synth))
    table.add_row("AUC", f"{cell.report.auc:.4f}")
    table.add_row("Best F1", f"{cell.report.best_f1:.4f} (contamination {cell.report.best_contamination:g})")
    table.add_row("G-measure", f"{cell.report.g_measure:.4f}")
    if cell.report.fpr_at_tpr is not None:
        tpr, fpr = cell.report.fpr_at_tpr
        table.add_row(f"FPR at TPR {tpr:g}", f"{fpr:.4f}")
    console.print(table)


@cli.command()
@click.argument('train_csv', type=click.Path(exists=True, dir_okay=False))
@click.argument('test_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--methods', default='none,doping,noise,smote', show_default=True,
              help='Comma-separated augmentation methods')
@click.option('--seeds', callback=_parse_seeds, default=None, help='Comma-separated seeds')
@click.option('--n-synth', callback=_check_n_synth, default=None, help='Synthetic rows (int or "10%")')
@click.option('--grid', callback=_parse_grid, default=None, help='Contamination grid start:stop:step')
@click.option('--steps', type=click.IntRange(min=1), default=None, help='AAE training steps')
@click.option('--out', '-o', type=click.Path(dir_okay=False), required=True,
              help='method,seed,auc,best_f1,g_measure CSV')
@click.option('--summary', type=click.Path(dir_okay=False), default=None, help='JSON summary')
@click.pass_context
@handle_errors
def compare(
    ctx: click.Context,
    train_csv: str,
    test_csv: str,
    methods: str,
    seeds: Optional[List[int]],
    n_synth: Optional[str],
    grid: Optional[SweepGrid],
    steps: Optional[int],
    out: str,
    summary: Optional[str]
):
    """Compare augmentation methods over several seeds."""
    config = _run_config(ctx, **{"aae.steps": steps, "augment.n_synth": n_synth})
    try:
        kinds = [parse_augmenter(m, config.augment.noise_fraction) for m in methods.split(",") if m.strip()]
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--methods")
    train = _load_features(train_csv)
    test = _load_features(test_csv, require_labels=True)

    result = compare_augmenters(
        train, test, kinds, config.augment.n_synth, config.detector,
        seeds or config.sweep.seeds, config.aae.setup(), grid or config.sweep.grid,
        config.sweep.tpr_target, jobs=ctx.obj["jobs"]
    )
    report_writer.write_method_cells(result, out)
    if summary:
        report_writer.create_summary_report(result, summary)
    _display_stats(result, "Augmenter Comparison", "Method")


@cli.command('compare-priors')
@click.argument('train_csv', type=click.Path(exists=True, dir_okay=False))
@click.argument('test_csv', type=click.Path(exists=True, dir_okay=False))
@click.option('--radii', callback=_parse_radii, default=None, help='start:stop:step or a list')
@click.option('--seeds', callback=_parse_seeds, default=None, help='Comma-separated seeds')
@click.option('--n-synth', callback=_check_n_synth, default=None, help='Synthetic rows per cell')
@click.option('--grid', callback=_parse_grid, default=None, help='Contamination grid start:stop:step')
@click.option('--steps', type=click.IntRange(min=1), default=None, help='AAE training steps')
@click.option('--out', '-o', type=click.Path(dir_okay=False), required=True, help='Per-prior CSV')
@click.option('--summary', type=click.Path(dir_okay=False), default=None, help='JSON summary')
@click.pass_context
@handle_errors
def compare_priors(
    ctx: click.Context,
    train_csv: str,
    test_csv: str,
    radii: Optional[List[float]],
    seeds: Optional[List[int]],
    n_synth: Optional[str],
    grid: Optional[SweepGrid],
    steps: Optional[int],
    out: str,
    summary: Optional[str]
):
    """Find the best decoding magnitude under several latent priors."""
    config = _run_config(ctx, **{"aae.steps": steps, "augment.n_synth": n_synth})
    train = _load_features(train_csv)
    test = _load_features(test_csv, require_labels=True)
    prior_cfg = config.aae.prior
    rows, sweeps = prior_comparison_experiment(
        train, test, config.aae.setup(),
        default_prior_family(prior_cfg.alpha, prior_cfg.mu),
        radii or config.sweep.radii_values(),
        resolve_n_synth(config.augment.n_synth, train.n_rows),
        config.detector,
        seeds or config.sweep.seeds,
        grid or config.sweep.grid,
        config.sweep.tpr_target,
        jobs=ctx.obj["jobs"]
    )
    report_writer.write_prior_comparison(rows, sweeps, out, summary)

    table = Table(title="Prior Comparison")
    table.add_column("Prior", style="cyan")
    table.add_column("Best radius", style="magenta")
    table.add_column("Best AUC", style="yellow")
    table.add_column("Baseline AUC", style="dim")
    table.add_column("Edge AUC", style="green")
    for row in rows:
        edge = "-" if row.edge_auc is None else f"{row.edge_auc:.4f}"
        table.add_row(row.name, f"{row.best_radius:g}", f"{row.best_auc:.4f}", f"{row.baseline_auc:.4f}", edge)
    console.print(table)


@cli.command('show-config')
@click.pass_context
def show_config(ctx: click.Context):
    """Print the effective run configuration as JSON."""
    click.echo(json.dumps(ctx.obj["config"].model_dump(), indent=2))


if __name__ == "__main__":
    cli()
