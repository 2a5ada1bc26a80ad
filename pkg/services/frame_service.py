"""Frame sequences as observation matrices for background subtraction."""
from typing import List, Sequence, Tuple

import numpy as np
import structlog

from core.errors import FrameFormatError
from models.matrix import Matrix

logger = structlog.get_logger(__name__)


class FrameService:
    """Stacking, unstacking and synthetic sequences of 8-bit grayscale frames."""

    @staticmethod
    def stack(frames: Sequence[np.ndarray]) -> Tuple[Matrix, Tuple[int, int]]:
        """
        Stack frames as the columns of M (pixels × frames), row-major pixel order.

        Raises:
            FrameFormatError: If there are no frames or their sizes differ
        """
        if not frames:
            raise FrameFormatError("no frames to stack")
        shape = frames[0].shape
        if len(shape) != 2:
            raise FrameFormatError(f"frames must be 2-D grayscale images, got shape {shape}")
        for i, frame in enumerate(frames):
            if frame.shape != shape:
                raise FrameFormatError(f"frame {i} has size {frame.shape}, expected {shape}")
        m_obs = np.stack([np.asarray(f, dtype=np.float64).reshape(-1) for f in frames], axis=1)
        return m_obs, shape

    @staticmethod
    def unstack(m: Matrix, shape: Tuple[int, int]) -> List[np.ndarray]:
        """Columns of m back to float frames of the given shape."""
        if m.shape[0] != shape[0] * shape[1]:
            raise FrameFormatError(f"{m.shape[0]} pixels per column do not match frame size {shape}")
        return [m[:, j].reshape(shape) for j in range(m.shape[1])]

    @staticmethod
    def to_background(l: Matrix, shape: Tuple[int, int]) -> List[np.ndarray]:
        """Columns of L rounded and clipped to 8-bit frames."""
        return [np.clip(np.rint(f), 0, 255).astype(np.uint8) for f in FrameService.unstack(l, shape)]

    @staticmethod
    def to_foreground(s: Matrix, shape: Tuple[int, int]) -> List[np.ndarray]:
        """|S| rescaled so that the largest magnitude over the sequence maps to 255."""
        mag = np.abs(s)
        peak = float(mag.max()) if mag.size else 0.0
        scaled = np.zeros_like(mag) if peak == 0.0 else mag * (255.0 / peak)
        return [np.rint(f).astype(np.uint8) for f in FrameService.unstack(scaled, shape)]

    @staticmethod
    def foreground_masks(s: Matrix, shape: Tuple[int, int], threshold: float) -> List[np.ndarray]:
        """Boolean per-frame masks |S| > threshold."""
        return [np.abs(f) > threshold for f in FrameService.unstack(s, shape)]

    @staticmethod
    def support_overlap(detected: Sequence[np.ndarray], truth: Sequence[np.ndarray]) -> List[float]:
        """Per frame, the fraction of true foreground pixels that were detected (1.0 for empty truth)."""
        overlaps = []
        for d, t in zip(detected, truth):
            total = int(np.count_nonzero(t))
            overlaps.append(1.0 if total == 0 else int(np.count_nonzero(d & t)) / total)
        return overlaps

    @staticmethod
    def moving_square_sequence(
        height: int = 64,
        width: int = 64,
        frames: int = 60,
        size: int = 10,
        seed: int = 0,
        background_level: float = 80.0,
        foreground_level: float = 230.0,
    ) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """
        A static textured background with a bright square sliding diagonally.

        The background is a horizontal gradient plus seeded texture in
        [background_level - 40, background_level + 40]; the square bounces
        between the image borders.

        Returns:
            Tuple of (uint8 frames, boolean ground-truth masks)
        """
        if size < 1 or size > min(height, width):
            raise FrameFormatError(f"square size {size} does not fit a {height}x{width} frame")
        rng = np.random.default_rng(seed)
        ramp = np.linspace(-20.0, 20.0, width)[None, :]
        texture = rng.uniform(-20.0, 20.0, size=(height, width))
        background = np.clip(background_level + ramp + texture, 0, 255)

        span_y = height - size
        span_x = width - size
        out_frames: List[np.ndarray] = []
        masks: List[np.ndarray] = []
        for k in range(frames):
            y = _bounce(2 * k, span_y)
            x = _bounce(3 * k, span_x)
            frame = background.copy()
            mask = np.zeros((height, width), dtype=bool)
            mask[y:y + size, x:x + size] = True
            frame[mask] = foreground_level
            out_frames.append(np.rint(frame).astype(np.uint8))
            masks.append(mask)
        logger.debug("moving_square_generated", height=height, width=width, frames=frames, size=size)
        return out_frames, masks


def _bounce(position: int, span: int) -> int:
    """Triangle wave over [0, span]."""
    if span == 0:
        return 0
    period = 2 * span
    r = position % period
    return r if r <= span else period - r
