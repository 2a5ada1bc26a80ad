"""bgsub: background subtraction on a directory of PGM frames."""
import argparse
from pathlib import Path

import numpy as np
import structlog

from commands.common import add_config_argument, add_rpca_arguments, build_config, write_trace
from commands.schemas import BgsubConfig
from core.errors import EXIT_OK
from repositories.frame_repository import FrameRepository
from services.frame_service import FrameService
from services.rpca_service import RpcaService

logger = structlog.get_logger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("bgsub", help="Split a frame sequence into background and foreground")
    add_config_argument(parser)
    parser.add_argument("--frames", default=None, help="Directory of 8-bit binary PGM frames")
    parser.add_argument("--out", default=None, help="Output directory (default ./out)")
    parser.add_argument("--max-frames", type=int, default=None, help="Use at most this many frames")
    parser.add_argument("--trace-format", choices=["csv", "jsonl"], default=None)
    rpca_flags = add_rpca_arguments(parser)
    parser.set_defaults(func=run, flags={
        "frames": "frames",
        "out": "out",
        "max_frames": "max_frames",
        "trace_format": "trace_format",
        **rpca_flags,
    })


def run(args: argparse.Namespace) -> int:
    cfg = build_config(args, BgsubConfig, args.flags)
    frames = FrameRepository.read_directory(cfg.frames)
    if cfg.max_frames is not None:
        frames = frames[:cfg.max_frames]
    m_obs, shape = FrameService.stack(frames)

    state, trace = RpcaService.rpca_solve(m_obs, cfg.rpca, video=True)
    trace.header = {"frames": len(frames), "height": shape[0], "width": shape[1], **trace.header}

    out_dir = Path(cfg.out)
    FrameRepository.write_directory(out_dir / "background", FrameService.to_background(state.l, shape), "background")
    FrameRepository.write_directory(out_dir / "foreground", FrameService.to_foreground(state.s, shape), "foreground")
    trace_path = write_trace(out_dir, trace, cfg.trace_format.value)

    ratio = float(np.linalg.norm(state.s) / max(np.linalg.norm(m_obs), np.finfo(float).tiny))
    print(f"frames: {len(frames)} ({shape[1]}x{shape[0]})")
    print(f"iterations: {len(trace)}")
    print(f"||S||_F/||M||_F: {ratio:.3e}")
    print(f"trace: {trace_path}")
    logger.info("bgsub_finished", out=str(out_dir), frames=len(frames), iterations=len(trace))
    return EXIT_OK
