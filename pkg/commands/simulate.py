"""simulate: synthetic decomposition experiment."""
import argparse
from pathlib import Path

import structlog

from commands.common import add_config_argument, add_rpca_arguments, build_config, write_trace
from commands.schemas import SimulateConfig
from core.errors import EXIT_OK
from repositories.matrix_repository import MatrixRepository
from repositories.report_repository import ReportRepository
from services.datagen_service import DatagenService
from services.rpca_service import RpcaService

logger = structlog.get_logger(__name__)

INSTANCE_FLAGS = {
    "m": "m",
    "n": "n",
    "rank": "rank",
    "sparsity": "sparsity",
    "magnitude": "magnitude",
    "sigma": "sigma",
    "seed": "seed",
    "out": "out",
    "trace_format": "trace_format",
}


def add_instance_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("instance")
    group.add_argument("--m", type=int, default=None, help="Rows of M (default 200)")
    group.add_argument("--n", type=int, default=None, help="Columns of M (default m)")
    group.add_argument("--rank", type=int, default=None, help="Rank of L (default 5)")
    group.add_argument("--sparsity", type=float, default=None, help="Fraction of nonzeros in S (default 0.05)")
    group.add_argument("--magnitude", type=float, default=None, help="Sparse entries in [-magnitude, magnitude] (default 50)")
    group.add_argument("--sigma", type=float, default=None, help="Noise standard deviation (default 0)")
    group.add_argument("--seed", type=int, default=None, help="64-bit seed (default 0)")
    parser.add_argument("--out", default=None, help="Output directory (default ./out)")
    parser.add_argument("--trace-format", choices=["csv", "jsonl"], default=None)


def generate(cfg: SimulateConfig):
    """Instance and the ground truth keyed by block name."""
    instance = DatagenService.gen_instance(
        m=cfg.m,
        n=cfg.n,
        rank=cfg.rank,
        sparsity=cfg.sparsity,
        magnitude=cfg.magnitude,
        sigma=cfg.sigma,
        seed=cfg.seed,
    )
    truth = {"L": instance.l_true, "S": instance.s_true, "T": instance.l_true + instance.s_true}
    return instance, truth


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Generate a synthetic instance and decompose it")
    add_config_argument(parser)
    add_instance_arguments(parser)
    rpca_flags = add_rpca_arguments(parser)
    parser.set_defaults(func=run, flags={**INSTANCE_FLAGS, **rpca_flags})


def run(args: argparse.Namespace) -> int:
    cfg = build_config(args, SimulateConfig, args.flags)
    instance, truth = generate(cfg)
    state, trace = RpcaService.rpca_solve(instance.m_obs, cfg.rpca, truth)
    manifest = DatagenService.manifest(instance)
    trace.header = {**manifest, **trace.header}

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = write_trace(out_dir, trace, cfg.trace_format.value)
    for name, matrix in (
        ("M", instance.m_obs),
        ("L_true", instance.l_true),
        ("S_true", instance.s_true),
        ("L_hat", state.l),
        ("S_hat", state.s),
        ("T_hat", state.t),
    ):
        MatrixRepository.write_bmat(out_dir / f"{name}.bmat", matrix)
    resolved = RpcaService.resolve(cfg.rpca, instance.m_obs)
    ReportRepository.write_manifest(out_dir / "manifest.json", {
        "instance": manifest,
        "rpca": resolved.model_dump(by_alias=True),
        "iterations": len(trace),
        "trace": trace_path.name,
    })

    last = trace.last
    print(f"iterations: {len(trace)}")
    if last is not None:
        print(f"relChg: {last.relchg:.3e}")
        for name in ("L", "S", "T"):
            value = last.rel_err.get(name)
            print(f"relErr_{name}: " + ("n/a" if value is None else f"{value:.3e}"))
    print(f"trace: {trace_path}")
    logger.info("simulate_finished", out=str(out_dir), iterations=len(trace))
    return EXIT_OK
