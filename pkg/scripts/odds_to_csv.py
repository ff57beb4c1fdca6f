#!/usr/bin/env python3
"""
Convert an ODDS ``.mat`` benchmark (arrays ``X`` and ``y``) to a labeled CSV.

Example:
    python scripts/odds_to_csv.py thyroid.mat data/thyroid.csv --minmax
"""

import logging
import sys
from pathlib import Path

import click
import numpy as np
from rich.logging import RichHandler
from scipy.io import loadmat

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.data.csv_io import write_csv  # noqa: E402
from src.data.datasets import Dataset  # noqa: E402

logger = logging.getLogger(__name__)


def load_odds(path: Path, minmax: bool = False) -> Dataset:
    """Read ``X``/``y`` from a MATLAB file; optionally scale every feature to [0, 1]."""
    mat = loadmat(str(path))
    if "X" not in mat or "y" not in mat:
        raise click.ClickException(f"{path} does not hold both 'X' and 'y'")
    X = np.asarray(mat["X"], dtype=np.float64)
    y = np.asarray(mat["y"]).reshape(-1).astype(np.int64)
    if minmax:
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        X = (X - lo) / span
    return Dataset(X, y, path.stem)


@click.command()
@click.argument('mat_file', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument('out_csv', type=click.Path(dir_okay=False, path_type=Path))
@click.option('--minmax', is_flag=True, help='Scale features to [0, 1] (needed by the random-noise baseline)')
def main(mat_file: Path, out_csv: Path, minmax: bool):
    """Convert MAT_FILE to OUT_CSV with a trailing label column."""
    logging.basicConfig(level=logging.INFO, format="%(message)s", handlers=[RichHandler()])
    ds = load_odds(mat_file, minmax)
    write_csv(ds, out_csv)
    logger.info(f"✅ {ds.n_rows} rows ({ds.n_anomalies} anomalies, {ds.n_features} features) -> {out_csv}")


if __name__ == "__main__":
    main()
