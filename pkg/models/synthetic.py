"""Synthetic low-rank + sparse + noise instance."""
from dataclasses import dataclass

from models.matrix import Matrix


@dataclass(frozen=True)
class SyntheticInstance:
    """M = l_true + s_true + noise, as generated from seed."""

    m_obs: Matrix
    l_true: Matrix
    s_true: Matrix
    noise: Matrix
    noise_sigma: float
    seed: int
    rank: int
    sparsity: float
    magnitude: float

    @property
    def shape(self):
        return self.m_obs.shape
