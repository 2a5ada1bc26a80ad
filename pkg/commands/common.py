"""Shared helpers for command modules: config merging and output paths."""
import argparse
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Type, TypeVar

from pydantic import BaseModel

from commands.schemas import LinearBlockFile
from models.matrix import Matrix
from models.trace import Trace
from repositories.config_repository import ConfigRepository
from repositories.matrix_repository import MatrixRepository
from repositories.trace_repository import TraceRepository
from services.linear_system_service import BlockBregman
from utils.bregman import from_config_name

ModelT = TypeVar("ModelT", bound=BaseModel)


def _set_dotted(target: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = target.get(key)
        if not isinstance(node, dict):
            node = {}
            target[key] = node
        target = node
    target[keys[-1]] = value


def add_config_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration; flags override its values")


def build_config(args: argparse.Namespace, model: Type[ModelT], flags: Mapping[str, str]) -> ModelT:
    """
    Merge a JSON config file with command-line flags and validate.

    Args:
        args: Parsed arguments; flags left at None are not applied
        model: Run configuration model
        flags: argparse dest -> dotted config key

    Raises:
        ConfigError: On unreadable files or invalid values
    """
    source = args.config if args.config is not None else "<flags>"
    data: Dict[str, Any] = ConfigRepository.load_json(args.config) if args.config is not None else {}
    for dest, dotted in flags.items():
        value = getattr(args, dest, None)
        if value is not None:
            _set_dotted(data, dotted, value)
    return ConfigRepository.validate(source, data, model)


def load_blocks(blocks: Sequence[LinearBlockFile], base: Path) -> Tuple[List[Matrix], List[BlockBregman]]:
    """
    Block matrices and their Bregman generators, paths taken relative to base.

    A block with a bregman name uses it; otherwise its gamma is the
    squared-Euclidean weight.
    """
    matrices = [MatrixRepository.read(base / b.matrix) for b in blocks]
    bregmans: List[BlockBregman] = []
    for b in blocks:
        if b.bregman is None:
            bregmans.append(b.gamma)
        else:
            bregmans.append(from_config_name(b.bregman, lambda p: MatrixRepository.read(base / p)))
    return matrices, bregmans


def write_trace(out_dir: Path, trace: Trace, trace_format: str) -> Path:
    path = out_dir / f"trace.{trace_format}"
    TraceRepository.write(path, trace)
    return path


def add_rpca_arguments(parser: argparse.ArgumentParser) -> Dict[str, str]:
    """Flags mirroring RpcaConfig; returns their dest -> config key map."""
    group = parser.add_argument_group("model")
    group.add_argument("--lambda", dest="lambda_", type=float, default=None, help="Weight on the l1/2 term")
    group.add_argument("--mu", type=float, default=None, help="Noise-fit weight (default 1e4)")
    group.add_argument("--gamma1", type=float, default=None, help="Bregman weight of L and S (default: alpha)")
    group.add_argument("--gamma2", type=float, default=None, help="Bregman weight of T (default: alpha + mu)")
    group.add_argument("--alpha0", type=float, default=None, help="Initial penalty (default 1e-3)")
    group.add_argument("--alpha-growth", type=float, default=None, help="Penalty growth factor (default 1.1)")
    group.add_argument("--alpha-max", type=float, default=None, help="Penalty cap (default 1e8)")
    group.add_argument(
        "--fixed-alpha", dest="schedule", action="store_const", const=False, default=None,
        help="Keep the penalty at alpha0",
    )
    group.add_argument("--init-rank-fraction", type=float, default=None, help="Initial rank as a fraction of min(m, n)")
    group.add_argument("--relchg", type=float, default=None, help="Stop when relChg falls below this (default 1e-8)")
    group.add_argument("--max-iter", type=int, default=None, help="Iteration cap (default 5000)")
    return {
        "lambda_": "rpca.lambda",
        "mu": "rpca.mu",
        "gamma1": "rpca.gamma1",
        "gamma2": "rpca.gamma2",
        "alpha0": "rpca.alpha0",
        "alpha_growth": "rpca.alpha_growth",
        "alpha_max": "rpca.alpha_max",
        "schedule": "rpca.schedule",
        "init_rank_fraction": "rpca.init_rank_fraction",
        "relchg": "rpca.relchg_threshold",
        "max_iter": "rpca.max_iterations",
    }
