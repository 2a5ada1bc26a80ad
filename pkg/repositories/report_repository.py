"""Report repository: diagnostics reports, sweep results and run manifests."""
import csv
import json
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import BaseModel

from models.diagnostics import DiagnosticsReport
from repositories.matrix_repository import format_float


class ReportRepository:
    """Write reports as JSON and margin series as CSV."""

    @staticmethod
    def write_json(path: Union[str, Path], report: BaseModel) -> None:
        Path(path).write_text(report.model_dump_json(indent=2) + "\n")

    @staticmethod
    def write_margins_csv(path: Union[str, Path], report: DiagnosticsReport) -> None:
        """One row per (check, iteration): check, iter, margin."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["check", "iter", "margin"])
            for check in report.checks:
                for it, margin in zip(check.iterations, check.margins):
                    writer.writerow([check.name, it, format_float(margin)])

    @staticmethod
    def write_manifest(path: Union[str, Path], manifest: Dict[str, Any]) -> None:
        Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    @staticmethod
    def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
        return json.loads(Path(path).read_text())
