"""
CSV ingestion and export for datasets and result tables.

Format: header ``f0,...,f{d-1}[,label]``, UTF-8, LF line endings, floats in
shortest round-trip decimal. Every file is written atomically (temp + rename).
"""

import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from ..exceptions import CsvFormatError
from .datasets import Dataset

logger = logging.getLogger(__name__)

LABEL_COLUMN = "label"


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def format_float(value: float) -> str:
    """Shortest decimal that parses back to the same double."""
    return repr(float(value))


def write_rows(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a table of already-formatted cells."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return atomic_write_text(path, buffer.getvalue())


def feature_header(n_features: int, prefix: str = "f") -> List[str]:
    return [f"{prefix}{j}" for j in range(n_features)]


def write_matrix(path: Union[str, Path], matrix: np.ndarray, prefix: str = "f") -> Path:
    """Unlabeled matrix export (synthetic samples, latent codes); zero rows gives a header-only file."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    rows = ([format_float(v) for v in row] for row in matrix)
    return write_rows(path, feature_header(matrix.shape[1], prefix), rows)


def read_header(path: Union[str, Path]) -> List[str]:
    """Column names of a CSV file (empty for an empty file)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [h.strip() for h in next(csv.reader(f), [])]


def write_csv(ds: Dataset, path: Union[str, Path]) -> Path:
    """Write a dataset; the label column is included when ``ds.y`` is present."""
    try:
        header = feature_header(ds.n_features)
        if ds.y is not None:
            header.append(LABEL_COLUMN)

        def rows():
            for i, row in enumerate(ds.X):
                cells = [format_float(v) for v in row]
                if ds.y is not None:
                    cells.append(str(int(ds.y[i])))
                yield cells

        path = write_rows(path, header, rows())
        logger.info(f"📝 Wrote {ds.n_rows} rows of {ds.name} to {path}")
        return path

    except Exception as e:
        logger.error(f"Failed to write CSV {path}: {e}")
        raise


def load_csv(path: Union[str, Path], label_column: Optional[str] = None, name: Optional[str] = None) -> Dataset:
    """Read a rectangular numeric table with a header row.

    When ``label_column`` is given it is split out as the label vector.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")

    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path} is empty (no header row)")

        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise CsvFormatError(f"{path} has no label column {label_column!r} (columns: {header})")
            label_idx = header.index(label_column)

        values = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: row {line_no} has {len(row)} cells, header has {len(header)}"
                )
            parsed = []
            for col, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: non-numeric cell {cell!r} at row {line_no}, column {col!r}"
                    ) from None
            values.append(parsed)

    table = np.asarray(values, dtype=np.float64).reshape(len(values), len(header))
    if not np.all(np.isfinite(table)):
        raise CsvFormatError(f"{path} contains non-finite values")

    y = None
    if label_idx is not None:
        y = table[:, label_idx]
        if not np.all((y == 0) | (y == 1)):
            raise CsvFormatError(f"{path}: label column {label_column!r} must hold 0/1 values")
        y = y.astype(np.int64)
        table = np.delete(table, label_idx, axis=1)

    ds = Dataset(table, y, name or path.stem)
    logger.info(f"📂 Loaded {ds.n_rows} rows x {ds.n_features} features from {path}")
    return ds
