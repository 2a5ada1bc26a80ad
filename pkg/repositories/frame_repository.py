"""Frame repository: binary PGM (P5) grayscale images."""
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import structlog

from core.errors import FrameFormatError

logger = structlog.get_logger(__name__)


def _tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """Read count whitespace-separated header tokens, skipping '#' comments. Returns tokens and the offset after them."""
    tokens: List[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
            i += 1
        if start == i:
            raise FrameFormatError("truncated PGM header")
        tokens.append(data[start:i])
    return tokens, i


class FrameRepository:
    """8-bit binary PGM frames and frame directories."""

    @staticmethod
    def read_pgm(path: Union[str, Path]) -> np.ndarray:
        """
        Raises:
            FrameFormatError: If the file is not an 8-bit P5 image
        """
        data = Path(path).read_bytes()
        try:
            (magic, width, height, maxval), offset = _tokens(data, 4)
        except FrameFormatError as e:
            raise FrameFormatError(f"{path}: {e}") from e
        if magic != b"P5":
            raise FrameFormatError(f"{path}: unsupported format {magic!r}, expected binary PGM (P5)")
        try:
            w, h, mx = int(width), int(height), int(maxval)
        except ValueError as e:
            raise FrameFormatError(f"{path}: malformed PGM header") from e
        if w < 1 or h < 1:
            raise FrameFormatError(f"{path}: invalid size {w}x{h}")
        if not 0 < mx <= 255:
            raise FrameFormatError(f"{path}: only 8-bit PGM is supported, maxval={mx}")
        # Exactly one whitespace byte separates the header from the raster.
        pixels = data[offset + 1:offset + 1 + w * h]
        if len(pixels) != w * h:
            raise FrameFormatError(f"{path}: expected {w * h} pixels, got {len(pixels)}")
        return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w).copy()

    @staticmethod
    def write_pgm(path: Union[str, Path], frame: np.ndarray) -> None:
        frame = np.asarray(frame)
        if frame.ndim != 2:
            raise FrameFormatError(f"frame must be 2-D, got shape {frame.shape}")
        h, w = frame.shape
        with open(path, "wb") as f:
            f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            f.write(np.ascontiguousarray(frame, dtype=np.uint8).tobytes())

    @staticmethod
    def read_directory(directory: Union[str, Path]) -> List[np.ndarray]:
        """
        All *.pgm files of a directory in name order.

        Raises:
            FrameFormatError: If the directory has no PGM frames or sizes differ
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise FrameFormatError(f"{directory} is not a directory")
        paths = sorted(p for p in directory.iterdir() if p.suffix.lower() == ".pgm")
        if not paths:
            raise FrameFormatError(f"no .pgm frames in {directory}")
        frames = [FrameRepository.read_pgm(p) for p in paths]
        shape = frames[0].shape
        for p, frame in zip(paths, frames):
            if frame.shape != shape:
                raise FrameFormatError(f"{p.name} has size {frame.shape}, expected {shape}")
        logger.info("frames_loaded", directory=str(directory), count=len(frames), shape=shape)
        return frames

    @staticmethod
    def write_directory(directory: Union[str, Path], frames: List[np.ndarray], prefix: str = "frame") -> List[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        width = max(4, len(str(len(frames))))
        paths = []
        for i, frame in enumerate(frames):
            path = directory / f"{prefix}_{i:0{width}d}.pgm"
            FrameRepository.write_pgm(path, frame)
            paths.append(path)
        return paths
