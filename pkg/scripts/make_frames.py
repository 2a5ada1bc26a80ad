"""Synthetic moving-square frame sequence generator.

Writes a sequence of 8-bit binary PGM frames (a static textured background
with a bright square sliding across it) plus the ground-truth square masks,
ready for `python main.py bgsub --frames <dir>/frames`.
"""
import argparse
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import structlog

from core.logging import configure_logging
from repositories.frame_repository import FrameRepository
from services.frame_service import FrameService

logger = structlog.get_logger(__name__)


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Generate a moving-square PGM frame sequence.")
    parser.add_argument("out", help="Output directory; frames/ and masks/ are created inside")
    parser.add_argument("--height", type=int, default=64)
    parser.add_argument("--width", type=int, default=64)
    parser.add_argument("--frames", type=int, default=60)
    parser.add_argument("--size", type=int, default=10, help="Square side in pixels")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the background texture")
    return parser.parse_args(argv)


def make_frames(args: argparse.Namespace) -> None:
    frames, masks = FrameService.moving_square_sequence(
        height=args.height,
        width=args.width,
        frames=args.frames,
        size=args.size,
        seed=args.seed,
    )
    FrameRepository.write_directory(os.path.join(args.out, "frames"), frames, "frame")
    mask_frames = [np.where(m, 255, 0).astype(np.uint8) for m in masks]
    FrameRepository.write_directory(os.path.join(args.out, "masks"), mask_frames, "mask")
    logger.info("frames_written", out=args.out, frames=len(frames))


if __name__ == "__main__":
    configure_logging()
    make_frames(parse_args())
