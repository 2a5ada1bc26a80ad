"""sweep-mu: grid search over the noise-fit weight on a synthetic instance."""
import argparse
from pathlib import Path

import structlog

from commands.common import add_config_argument, add_rpca_arguments, build_config
from commands.schemas import SweepMuConfig
from commands.simulate import INSTANCE_FLAGS, add_instance_arguments, generate
from core.errors import EXIT_OK
from repositories.report_repository import ReportRepository
from services.rpca_service import RpcaService

logger = structlog.get_logger(__name__)


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.3e}"


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep-mu", help="Solve a synthetic instance for several mu values")
    add_config_argument(parser)
    add_instance_arguments(parser)
    parser.add_argument("--mus", type=float, nargs="+", default=None, help="Candidate mu values")
    rpca_flags = add_rpca_arguments(parser)
    parser.set_defaults(func=run, flags={**INSTANCE_FLAGS, "mus": "mus", **rpca_flags})


def run(args: argparse.Namespace) -> int:
    cfg = build_config(args, SweepMuConfig, args.flags)
    instance, truth = generate(cfg)
    result = RpcaService.sweep_mu(instance.m_obs, cfg.rpca, cfg.mus, truth)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ReportRepository.write_json(out_dir / "sweep.json", result)

    print("mu relErr_L relErr_S iterations")
    for point in result.points:
        print(f"{point.mu!r} {_fmt(point.rel_err_l)} {_fmt(point.rel_err_s)} {point.iterations}")
    print(f"best mu: {result.best_mu!r}")
    return EXIT_OK
