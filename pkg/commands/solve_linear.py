"""solve-linear: block-split linear system A_1 x_1 + ... + A_N x_N = 0."""
import argparse
from pathlib import Path

import structlog

from commands.common import add_config_argument, build_config, load_blocks, write_trace
from commands.schemas import LinearBlockFile, SolveLinearConfig
from core.errors import EXIT_OK
from models.problem import AlphaSchedule, StoppingRule
from repositories.matrix_repository import MatrixRepository
from services.engine_service import EngineService
from services.linear_system_service import LinearSystemService
from services.parameter_service import ParameterService

logger = structlog.get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve-linear", help="Find a point of a block-split linear system")
    add_config_argument(parser)
    parser.add_argument(
        "--block", dest="blocks", action="append", default=None, metavar="PATH[:GAMMA|:BREGMAN]",
        help="Block matrix file with an optional Bregman weight or generator name "
        "(e.g. a.csv:0.5, a.csv:mahalanobis:q.csv); repeat in block order, the last must be square",
    )
    parser.add_argument("--alpha", type=float, default=None, help="Penalty (default 10)")
    parser.add_argument("--alpha-growth", type=float, default=None, help="Enable the penalty schedule")
    parser.add_argument("--alpha-max", type=float, default=None)
    parser.add_argument("--unchecked", dest="checked", action="store_const", const=False, default=None,
                        help="Skip the descent-constant requirements")
    parser.add_argument("--seed", type=int, default=None, help="Seed of the random starting point")
    parser.add_argument("--relchg", type=float, default=None)
    parser.add_argument("--max-iter", type=int, default=None, help="Iteration cap (default 10000)")
    parser.add_argument("--audit", action="store_const", const=True, default=None,
                        help="Perturbation audit of every block update")
    parser.add_argument("--out", default=None, help="Write the trace and block iterates here")
    parser.add_argument("--trace-format", choices=["csv", "jsonl"], default=None)
    parser.set_defaults(func=run, flags={
        "blocks": "blocks",
        "alpha": "alpha",
        "alpha_growth": "alpha_growth",
        "alpha_max": "alpha_max",
        "checked": "checked",
        "seed": "seed",
        "relchg": "relchg_threshold",
        "max_iter": "max_iterations",
        "audit": "audit",
        "out": "out",
        "trace_format": "trace_format",
    })


def _parse_block(text: str) -> dict:
    """PATH, PATH:GAMMA or PATH:BREGMAN-NAME."""
    path, sep, rest = text.partition(":")
    if not sep or not path:
        return LinearBlockFile(matrix=text).model_dump(exclude_none=True)
    try:
        gamma = float(rest)
    except ValueError:
        return LinearBlockFile(matrix=path, bregman=rest).model_dump(exclude_none=True)
    return LinearBlockFile(matrix=path, gamma=gamma).model_dump(exclude_none=True)


def run(args: argparse.Namespace) -> int:
    if args.blocks is not None:
        args.blocks = [_parse_block(b) for b in args.blocks]
    cfg = build_config(args, SolveLinearConfig, args.flags)
    base = Path(args.config).parent if args.config is not None and args.blocks is None else Path(".")
    a_blocks, bregmans = load_blocks(cfg.blocks, base)

    schedule = None
    if cfg.alpha_growth is not None:
        schedule = AlphaSchedule(growth_factor=cfg.alpha_growth, alpha_max=cfg.alpha_max)
    spec = LinearSystemService.linear_system_spec(
        a_blocks,
        bregmans,
        alpha=cfg.alpha,
        alpha_schedule=schedule,
        checked=cfg.checked,
    )
    if cfg.checked:
        print(ParameterService.validate_alpha(spec).summary())
    init = LinearSystemService.random_init(spec, cfg.seed)
    stop = StoppingRule(relchg_threshold=cfg.relchg_threshold, max_iterations=cfg.max_iterations)
    state, trace = LinearSystemService.solve(spec, init, stop, audit=cfg.audit)

    residual = EngineService.primal_residual(spec, state)
    if cfg.out is not None:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_trace(out_dir, trace, cfg.trace_format.value)
        for name, x in zip(spec.block_names, state.x):
            MatrixRepository.write_bmat(out_dir / f"{name}.bmat", x)

    print(f"iterations: {len(trace)}")
    print(f"||sum A_i x_i||: {residual:.3e}")
    logger.info("solve_linear_finished", iterations=len(trace), residual=residual)
    return EXIT_OK
