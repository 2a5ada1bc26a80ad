"""Problem, block and iterate types for the N-block Bregman ADMM engine."""
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple
import enum

import numpy as np
from pydantic import BaseModel, Field

from core.config import settings
from core.errors import DomainError, ShapeError
from models.bregman import BregmanDistance
from models.matrix import Matrix, as_matrix
from utils.bregman import distance


class EngineMode(str, enum.Enum):
    """Engine recursion variant."""
    CONSTRAINED = "constrained"
    UNCONSTRAINED_BADM = "unconstrained_badm"


@dataclass(frozen=True)
class SubproblemContext:
    """
    Anchor data handed to a block solver.

    The block subproblem is
        min_x f_i(x) + <p, A_i x> + (α/2)||A_i x + rest||² + D_phi_i(x, x_prev)
    where rest = Σ_{j≠i} A_j x_j uses the freshest iterates of the preceding
    blocks and the previous iterates of the following ones. In BADM mode
    alpha = 0 and p = 0, leaving f_i(x) + D_phi_i(x, x_prev).
    """

    index: int
    block: "BlockSpec"
    x_prev: Matrix
    rest: Matrix
    p: Matrix
    alpha: float
    iterates: Tuple[Matrix, ...]

    def shifted_rest(self) -> Matrix:
        """rest + p/α (zero in BADM mode)."""
        if self.alpha == 0.0:
            return np.zeros_like(self.rest)
        return self.rest + self.p / self.alpha

    def objective(self, x: Matrix) -> float:
        """Value of the block subproblem objective at x."""
        value = self.block.objective_value(x) + distance(self.block.bregman, x, self.x_prev)
        if self.alpha != 0.0:
            ax = self.block.constraint_matrix @ x
            residual = ax + self.rest
            value += float(np.vdot(self.p, ax)) + 0.5 * self.alpha * float(np.vdot(residual, residual))
        return float(value)


BlockSolver = Callable[[SubproblemContext], Matrix]


@dataclass(frozen=True)
class BlockSpec:
    """
    One block of the composite problem.

    objective_smooth_lipschitz is the Lipschitz constant of grad f_i and is
    required on the last block; objective_strong_convexity the modulus of f_i.
    """

    name: str
    constraint_matrix: Matrix
    objective_value: Callable[[Matrix], float]
    subproblem_solver: BlockSolver
    bregman: BregmanDistance
    objective_smooth_lipschitz: Optional[float] = None
    objective_strong_convexity: float = 0.0

    @property
    def effective_modulus(self) -> float:
        """max(modulus of f_i, modulus of phi_i)."""
        return max(self.objective_strong_convexity, self.bregman.strong_convexity_mu)

    @property
    def rows(self) -> int:
        return int(self.constraint_matrix.shape[0])

    @property
    def cols(self) -> int:
        return int(self.constraint_matrix.shape[1])


class AlphaSchedule(BaseModel):
    """Dynamic penalty update α ← min(α·growth_factor, alpha_max)."""

    growth_factor: float = Field(default=settings.DEFAULT_ALPHA_GROWTH, gt=1.0)
    alpha_max: float = Field(default=settings.DEFAULT_ALPHA_MAX, gt=0.0)

    def next_alpha(self, alpha: float) -> float:
        return min(alpha * self.growth_factor, self.alpha_max)


class StoppingRule(BaseModel):
    """Stop when relChg < relchg_threshold or after max_iterations steps."""

    relchg_threshold: float = Field(default=settings.DEFAULT_RELCHG_THRESHOLD, ge=0.0)
    max_iterations: int = Field(default=settings.DEFAULT_MAX_ITERATIONS, ge=0)


@dataclass(frozen=True)
class ProblemSpec:
    """
    The assembled N-block problem min Σ f_i(x_i) s.t. Σ A_i x_i = 0.

    checked=True enables the descent-constant requirements (positive block
    moduli, full-row-rank last constraint matrix).
    """

    blocks: Tuple[BlockSpec, ...]
    alpha: float
    alpha_schedule: Optional[AlphaSchedule] = None
    mode: EngineMode = EngineMode.CONSTRAINED
    checked: bool = True

    def __post_init__(self):
        if len(self.blocks) < 1:
            raise ShapeError("ProblemSpec needs at least one block")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        rows = {b.rows for b in self.blocks}
        if len(rows) != 1:
            raise ShapeError(f"constraint matrices must share their row count, got {sorted(rows)}")
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ShapeError(f"block names must be unique, got {names}")

    @property
    def constraint_rows(self) -> int:
        return self.blocks[0].rows

    @property
    def last(self) -> BlockSpec:
        return self.blocks[-1]

    @property
    def block_names(self) -> Tuple[str, ...]:
        return tuple(b.name for b in self.blocks)

    def with_alpha(self, alpha: float) -> "ProblemSpec":
        return replace(self, alpha=alpha)


@dataclass(frozen=True)
class IterateState:
    """ŵ = (x_1, ..., x_N, p, x̂_N) plus bookkeeping; prev_last_block is x̂_N."""

    x: Tuple[Matrix, ...]
    p: Matrix
    prev_last_block: Matrix
    iteration: int
    alpha_current: float

    @classmethod
    def initial(
        cls,
        spec: ProblemSpec,
        x: Sequence[Matrix],
        p: Optional[Matrix] = None,
    ) -> "IterateState":
        """
        Build a starting state, checking shapes against the ProblemSpec.

        p defaults to zero and prev_last_block to x_N.

        Raises:
            ShapeError: If a block iterate or p does not conform
        """
        if len(x) != len(spec.blocks):
            raise ShapeError(f"expected {len(spec.blocks)} block iterates, got {len(x)}")
        xs = tuple(as_matrix(xi, f"x[{block.name}]") for xi, block in zip(x, spec.blocks))
        for xi, block in zip(xs, spec.blocks):
            if xi.shape[0] != block.cols:
                raise ShapeError(
                    f"block '{block.name}' iterate has {xi.shape[0]} rows, constraint matrix has {block.cols} columns"
                )
        cols = {xi.shape[1] for xi in xs}
        if len(cols) != 1:
            raise ShapeError(f"block iterates must share their column count, got {sorted(cols)}")
        p_shape = (spec.constraint_rows, xs[0].shape[1])
        p = np.zeros(p_shape) if p is None else as_matrix(p, "multiplier")
        if p.shape != p_shape:
            raise ShapeError(f"multiplier must have shape {p_shape}, got {p.shape}")
        return cls(x=xs, p=p, prev_last_block=xs[-1].copy(), iteration=0, alpha_current=float(spec.alpha))
