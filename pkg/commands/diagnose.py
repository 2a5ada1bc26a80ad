"""diagnose: run the convergence checks on a stored trace."""
import argparse
from pathlib import Path
from typing import Optional

import structlog

from commands.common import build_config, load_blocks
from commands.schemas import DiagnoseConfig, ProblemSpecFile
from core.errors import EXIT_DIAGNOSTIC_VIOLATION, EXIT_OK
from models.diagnostics import DescentConstants
from repositories.config_repository import ConfigRepository
from repositories.report_repository import ReportRepository
from repositories.trace_repository import TraceRepository
from services.diagnostics_service import DiagnosticsService
from services.linear_system_service import LinearSystemService
from services.parameter_service import ParameterService

logger = structlog.get_logger(__name__)


def load_constants(path: Path) -> DescentConstants:
    """Descent constants from a problem spec file, computing them from block matrices when given."""
    spec_file = ConfigRepository.load_model(path, ProblemSpecFile)
    if spec_file.constants is not None:
        return spec_file.constants
    a_blocks, bregmans = load_blocks(spec_file.blocks, path.parent)
    spec = LinearSystemService.linear_system_spec(a_blocks, bregmans, alpha=spec_file.alpha)
    return ParameterService.descent_constants(spec)


def register(subparsers) -> None:
    parser = subparsers.add_parser("diagnose", help="Check descent and multiplier inequalities along a trace")
    parser.add_argument("trace", type=Path, help="Trace file (.csv or .jsonl)")
    parser.add_argument("spec", type=Path, nargs="?", default=None, help="Problem spec JSON (constants or blocks)")
    parser.add_argument("--report", default=None, help="Write the report as JSON")
    parser.add_argument("--margins", default=None, help="Write per-iteration margins as CSV")
    parser.set_defaults(func=run, config=None, flags={
        "trace": "trace",
        "spec": "spec",
        "report": "report",
        "margins": "margins",
    })


def run(args: argparse.Namespace) -> int:
    args.trace = str(args.trace)
    args.spec = None if args.spec is None else str(args.spec)
    cfg = build_config(args, DiagnoseConfig, args.flags)
    trace = TraceRepository.read(cfg.trace)
    constants: Optional[DescentConstants] = None
    if cfg.spec is not None:
        constants = load_constants(Path(cfg.spec))

    report = DiagnosticsService.run_diagnostics(trace, constants)
    for line in DiagnosticsService.format_report(report):
        print(line)
    if cfg.report:
        ReportRepository.write_json(cfg.report, report)
    if cfg.margins:
        ReportRepository.write_margins_csv(cfg.margins, report)

    if not report.passed:
        names = ", ".join(c.name for c in report.violations)
        print(f"violated: {names}")
        logger.warning("diagnostics_violated", checks=[c.name for c in report.violations])
        return EXIT_DIAGNOSTIC_VIOLATION
    return EXIT_OK
