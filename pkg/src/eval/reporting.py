"""
Result files: plot-ready CSV cells and JSON summaries.

Nothing time-dependent goes into these files, so identical runs produce
identical bytes.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from ..data.csv_io import atomic_write_text, format_float, write_rows
from .experiments import ExperimentResult, PriorComparisonRow
from .metrics import MetricReport

logger = logging.getLogger(__name__)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of ``config``."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def _dump(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


class ReportWriter:
    """Writes experiment tables and summaries."""

    def write_sweep_cells(self, result: ExperimentResult, output_path: Union[str, Path]) -> Path:
        """``radius,seed,auc`` rows; the radius cell holds ``none``/``edge`` for the reference rows."""
        try:
            rows = (
                [cell.label, str(cell.seed), format_float(cell.report.auc)]
                for cell in result.cells
            )
            path = write_rows(output_path, ["radius", "seed", "auc"], rows)
            logger.info(f"📝 Sweep table written: {path}")
            return path

        except Exception as e:
            logger.error(f"Failed to write sweep table: {e}")
            raise

    def write_method_cells(self, result: ExperimentResult, output_path: Union[str, Path]) -> Path:
        """``method,seed,auc,best_f1,g_measure`` rows."""
        try:
            rows = (
                [
                    cell.label, str(cell.seed), format_float(cell.report.auc),
                    format_float(cell.report.best_f1), format_float(cell.report.g_measure)
                ]
                for cell in result.cells
            )
            path = write_rows(output_path, ["method", "seed", "auc", "best_f1", "g_measure"], rows)
            logger.info(f"📝 Comparison table written: {path}")
            return path

        except Exception as e:
            logger.error(f"Failed to write comparison table: {e}")
            raise

    def create_summary_report(self, result: ExperimentResult, output_path: Union[str, Path]) -> Dict[str, Any]:
        """JSON summary: experiment name, config hash and per-label statistics."""
        try:
            summary: Dict[str, Any] = {
                "experiment": result.experiment,
                "config_hash": config_hash(result.config),
                "config": result.config,
                "stats": result.stats()
            }
            if result.experiment == "magnitude_sweep":
                radius, auc = result.best_radius()
                summary["best_radius"] = {"radius": radius, "auc_mean": auc}
            atomic_write_text(output_path, _dump(summary))
            logger.info(f"📊 Summary report created: {output_path}")
            return summary

        except Exception as e:
            logger.error(f"Failed to create summary report: {e}")
            raise

    def write_metric_report(
        self,
        report: MetricReport,
        output_path: Union[str, Path],
        context: Optional[Dict[str, Any]] = None
    ) -> Dict[str, Any]:
        """Single-run report with the config hash of ``context``."""
        try:
            context = context or {}
            data = {"config_hash": config_hash(context), "config": context, **report.to_dict()}
            atomic_write_text(output_path, _dump(data))
            logger.info(f"📊 Metric report written: {output_path}")
            return data

        except Exception as e:
            logger.error(f"Failed to write metric report: {e}")
            raise

    def write_prior_comparison(
        self,
        rows: Sequence[PriorComparisonRow],
        sweeps: Sequence[ExperimentResult],
        output_path: Union[str, Path],
        summary_path: Optional[Union[str, Path]] = None
    ) -> Path:
        """``prior,best_radius,best_auc,baseline_auc,edge_auc`` plus an optional JSON summary."""
        try:
            table = (
                [
                    row.name, format_float(row.best_radius), format_float(row.best_auc),
                    format_float(row.baseline_auc),
                    "" if row.edge_auc is None else format_float(row.edge_auc)
                ]
                for row in rows
            )
            path = write_rows(output_path, ["prior", "best_radius", "best_auc", "baseline_auc", "edge_auc"], table)
            if summary_path is not None:
                configs: List[Dict[str, Any]] = [s.config for s in sweeps]
                summary = {
                    "experiment": "prior_comparison",
                    "config_hash": config_hash({"sweeps": configs}),
                    "priors": [row.to_dict() for row in rows]
                }
                atomic_write_text(summary_path, _dump(summary))
            logger.info(f"📝 Prior comparison written: {path}")
            return path

        except Exception as e:
            logger.error(f"Failed to write prior comparison: {e}")
            raise


# Global report writer instance
report_writer = ReportWriter()
