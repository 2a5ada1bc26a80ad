"""Low-rank + sparse + noise decomposition model types."""
from dataclasses import dataclass
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import settings
from models.matrix import Matrix

# Trade-off weight λ·max(m, n) for simulations and for frame sequences.
SIMULATION_LAMBDA_SCALE = 60.0
VIDEO_LAMBDA_SCALE = 50.0
NOISELESS_MU = 1e4
# Noise-fit weights tried when the noise level is unknown.
MU_CANDIDATES = (0.05, 0.1, 0.2, 0.5, 1.0, 10.0, 100.0)


class RpcaConfig(BaseModel):
    """
    Parameters of min ||L||_* + λ||S||_{1/2}^{1/2} + (μ/2)||T - M||_F² s.t. T = L + S.

    An unset lambda is filled when a solve starts: 60/max(m, n), or
    50/max(m, n) for frame sequences. alpha0 defaults to 1e-3 and grows by
    alpha_growth per step. Unset gamma1 and gamma2 follow the current
    penalty: gamma1 = α and gamma2 = α + μ at every step.
    A gamma of 0 drops that block's Bregman term.
    """

    model_config = ConfigDict(populate_by_name=True)

    lambda_: Optional[float] = Field(None, alias="lambda", gt=0.0, description="Weight on the ℓ½ term")
    mu: float = Field(NOISELESS_MU, gt=0.0, description="Noise-fit weight")
    gamma1: Optional[float] = Field(None, ge=0.0, description="Bregman weight of the L and S blocks")
    gamma2: Optional[float] = Field(None, ge=0.0, description="Bregman weight of the T block")
    alpha0: float = Field(settings.DEFAULT_ALPHA0, gt=0.0, description="Initial penalty")
    alpha_growth: float = Field(settings.DEFAULT_ALPHA_GROWTH, gt=1.0)
    alpha_max: float = Field(settings.DEFAULT_ALPHA_MAX, gt=0.0)
    schedule: bool = Field(True, description="Grow α by alpha_growth after each step")
    init_rank_fraction: float = Field(0.01, gt=0.0, le=1.0)
    relchg_threshold: float = Field(settings.DEFAULT_RELCHG_THRESHOLD, ge=0.0)
    max_iterations: int = Field(settings.DEFAULT_MAX_ITERATIONS, ge=0)

    @model_validator(mode="after")
    def check_alpha_range(self) -> "RpcaConfig":
        if self.alpha0 > self.alpha_max:
            raise ValueError(f"alpha0 ({self.alpha0}) must not exceed alpha_max ({self.alpha_max})")
        return self


@dataclass(frozen=True)
class RpcaState:
    """Iterates L, S, T, the multiplier p and the previous T (the x̂_N of the merit)."""

    l: Matrix
    s: Matrix
    t: Matrix
    p: Matrix
    alpha_current: float
    prev_t: Matrix
    iteration: int = 0


class SweepPoint(BaseModel):
    """Outcome of one μ value in a grid sweep."""

    mu: float
    rel_err_l: Optional[float] = None
    rel_err_s: Optional[float] = None
    iterations: int
    final_relchg: Optional[float] = None


class SweepResult(BaseModel):
    """All sweep points and the μ with the smallest relErr_L (ties broken by relErr_S)."""

    points: List[SweepPoint] = Field(default_factory=list)
    best_mu: Optional[float] = None
