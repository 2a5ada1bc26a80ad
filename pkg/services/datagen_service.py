"""Deterministic synthetic data for the decomposition experiments.

Random numbers come from numpy's PCG64 bit generator seeded with a 64-bit
integer, consumed in a fixed order: U, V, the sparse support, the sparse
values, then the noise. Gaussians are produced by the Box-Muller transform
on PCG64 uniforms; the support is the prefix of a seeded Fisher-Yates
shuffle of the m·n flat indices.
"""
from typing import Any, Dict, Optional

import numpy as np
import structlog

from core.config import settings
from core.errors import DomainError, ShapeError
from models.matrix import Matrix
from models.synthetic import SyntheticInstance

logger = structlog.get_logger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    if seed < 0 or seed >= 2 ** 64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def box_muller(rng: np.random.Generator, shape) -> Matrix:
    """Standard normal samples from pairs of uniforms, filled in row-major order."""
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    # 1 - u1 lies in (0, 1], keeping the logarithm finite.
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count].reshape(shape)


def fisher_yates_prefix(rng: np.random.Generator, population: int, k: int) -> np.ndarray:
    """First k entries of a Fisher-Yates shuffle of range(population)."""
    perm = np.arange(population)
    for i in range(k):
        j = int(rng.integers(i, population))
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:k].copy()


class DatagenService:
    """Synthetic instance generation."""

    @staticmethod
    def gen_instance(
        m: int,
        rank: int,
        sparsity: Optional[float] = None,
        magnitude: Optional[float] = None,
        sigma: float = 0.0,
        seed: int = 0,
        n: Optional[int] = None,
    ) -> SyntheticInstance:
        """
        L = U Vᵀ with i.i.d. N(0, 1) factors U (m×r) and V (n×r); S supported
        on round(sparsity·m·n) uniformly chosen entries with values uniform in
        [-magnitude, magnitude]; noise i.i.d. N(0, sigma²).

        Args:
            m: Rows
            rank: Rank r of L, at most min(m, n)
            sparsity: Fraction of nonzero entries of S, defaults to settings.DEFAULT_SPARSITY
            magnitude: Bound on the sparse entries, defaults to settings.DEFAULT_MAGNITUDE
            sigma: Noise standard deviation
            seed: 64-bit seed
            n: Columns, defaults to m

        Raises:
            ShapeError: If the dimensions are invalid
            DomainError: If sparsity, magnitude, sigma or seed are out of range
        """
        n = m if n is None else n
        sparsity = settings.DEFAULT_SPARSITY if sparsity is None else sparsity
        magnitude = settings.DEFAULT_MAGNITUDE if magnitude is None else magnitude
        if m < 1 or n < 1:
            raise ShapeError(f"instance dimensions must be positive, got {m}x{n}")
        if rank < 0 or rank > min(m, n):
            raise ShapeError(f"rank must lie in [0, {min(m, n)}], got {rank}")
        if not 0.0 <= sparsity <= 1.0:
            raise DomainError(f"sparsity must lie in [0, 1], got {sparsity}")
        if magnitude < 0.0:
            raise DomainError(f"magnitude must be nonnegative, got {magnitude}")
        if sigma < 0.0:
            raise DomainError(f"sigma must be nonnegative, got {sigma}")

        rng = make_rng(seed)
        u = box_muller(rng, (m, rank))
        v = box_muller(rng, (n, rank))
        l_true = u @ v.T

        k = int(round(sparsity * m * n))
        support = fisher_yates_prefix(rng, m * n, k)
        values = -magnitude + 2.0 * magnitude * rng.random(k)
        s_flat = np.zeros(m * n)
        s_flat[support] = values
        s_true = s_flat.reshape(m, n)

        if sigma > 0.0:
            noise = sigma * box_muller(rng, (m, n))
        else:
            noise = np.zeros((m, n))
        m_obs = l_true + s_true + noise

        logger.debug("instance_generated", m=m, n=n, rank=rank, sparsity=sparsity, sigma=sigma, seed=seed)
        return SyntheticInstance(
            m_obs=m_obs,
            l_true=l_true,
            s_true=s_true,
            noise=noise,
            noise_sigma=float(sigma),
            seed=int(seed),
            rank=int(rank),
            sparsity=float(sparsity),
            magnitude=float(magnitude),
        )

    @staticmethod
    def manifest(instance: SyntheticInstance) -> Dict[str, Any]:
        """Generation parameters, enough to regenerate the instance."""
        rows, cols = instance.shape
        return {
            "generator": "pcg64+box_muller+fisher_yates",
            "rows": rows,
            "cols": cols,
            "rank": instance.rank,
            "sparsity": instance.sparsity,
            "magnitude": instance.magnitude,
            "sigma": instance.noise_sigma,
            "seed": instance.seed,
            "nonzeros": int(np.count_nonzero(instance.s_true)),
        }
