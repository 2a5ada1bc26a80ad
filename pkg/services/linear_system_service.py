"""Block-split underdetermined linear system A_1 x_1 + ... + A_N x_N = 0."""
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.optimize
import structlog

from core.errors import DomainError, RankDeficiencyError, ShapeError, SolverError
from models.bregman import BregmanDistance, DomainTag
from models.matrix import Matrix, as_matrix
from models.problem import AlphaSchedule, BlockSpec, IterateState, ProblemSpec, StoppingRule, SubproblemContext
from models.trace import Trace
from services.engine_service import EngineService
from utils.bregman import null_distance, squared_euclidean
from utils.linalg import numerical_rank

logger = structlog.get_logger(__name__)

BlockBregman = Union[float, BregmanDistance]

# Positive-orthant iterates are kept at or above this value by the inner solver.
_ORTHANT_FLOOR = 1e-300


def _zero_objective(x: Matrix) -> float:
    return 0.0


def _as_bregman(value: BlockBregman, name: str) -> BregmanDistance:
    if isinstance(value, BregmanDistance):
        return value
    gamma = float(value)
    if gamma < 0:
        raise DomainError(f"Bregman weight of block '{name}' must be nonnegative, got {gamma}")
    return squared_euclidean(gamma) if gamma > 0 else null_distance()


class QuadraticBlockSolver:
    """
    Exact minimizer of (α/2)||A x + rest + p/α||² + ½<Q(x - x^k), x - x^k>:
    x = (αAᵀA + Q)⁻¹(Qx^k - αAᵀ(rest + p/α)).

    Holds the Cholesky factor of one penalty value; a new α replaces it.
    """

    def __init__(self, a: Matrix, bregman: BregmanDistance, name: str):
        self.a = a
        self.name = name
        self.gram = a.T @ a
        self.q = bregman.metric(a.shape[1])
        self.alpha: Optional[float] = None
        self.factor = None

    def __call__(self, ctx: SubproblemContext) -> Matrix:
        alpha = ctx.alpha
        if alpha != self.alpha:
            try:
                self.factor = scipy.linalg.cho_factor(alpha * self.gram + self.q)
            except np.linalg.LinAlgError as e:
                raise RankDeficiencyError(
                    f"normal matrix of block '{self.name}' is singular at alpha={alpha!r}"
                ) from e
            self.alpha = alpha
        rhs = self.q @ ctx.x_prev - alpha * (self.a.T @ ctx.shifted_rest())
        return scipy.linalg.cho_solve(self.factor, rhs)


def _orthant_solver(a: Matrix, bregman: BregmanDistance, name: str):
    """
    Minimizer of (α/2)||A x + rest + p/α||² + D_phi(x, x^k) over x > 0 for
    generators without a quadratic form, by bounded L-BFGS-B.
    """

    def solve(ctx: SubproblemContext) -> Matrix:
        x_prev = np.asarray(ctx.x_prev, dtype=np.float64)
        if not np.all(x_prev > 0):
            raise DomainError(f"block '{name}' uses {bregman.name}; its iterate must stay positive")
        shape = x_prev.shape
        alpha = ctx.alpha
        shift = ctx.shifted_rest()
        grad_prev = bregman.grad_phi(x_prev)

        def fun(flat: np.ndarray):
            x = flat.reshape(shape)
            r = a @ x + shift
            value = 0.5 * alpha * float(np.vdot(r, r)) + bregman.closed_form(x, x_prev)
            grad = alpha * (a.T @ r) + bregman.grad_phi(x) - grad_prev
            return value, grad.ravel()

        result = scipy.optimize.minimize(
            fun,
            x_prev.ravel(),
            jac=True,
            method="L-BFGS-B",
            bounds=[(_ORTHANT_FLOOR, None)] * x_prev.size,
            options={"maxiter": 10000, "ftol": 1e-15, "gtol": 1e-12},
        )
        if not np.all(np.isfinite(result.x)):
            raise SolverError(name, f"inner solver failed: {result.message}")
        return result.x.reshape(shape)

    return solve


def _block_solver(a: Matrix, bregman: BregmanDistance, name: str):
    if bregman.metric is not None:
        return QuadraticBlockSolver(a, bregman, name)
    if bregman.domain_tag == DomainTag.POSITIVE_ORTHANT and bregman.closed_form is not None:
        return _orthant_solver(a, bregman, name)
    raise DomainError(f"no block solver for Bregman generator '{bregman.name}'")


class LinearSystemService:
    """Engine mapping of a linear system split into column blocks, all f_i ≡ 0."""

    @staticmethod
    def block_names(count: int) -> Tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(count))

    @staticmethod
    def linear_system_spec(
        a_blocks: Sequence[Matrix],
        bregmans: Sequence[BlockBregman],
        alpha: float = 1.0,
        alpha_schedule: Optional[AlphaSchedule] = None,
        checked: bool = True,
    ) -> ProblemSpec:
        """
        Build the ProblemSpec with exact block solvers.

        Each Bregman entry is a generator or a squared-Euclidean weight;
        a weight of 0 uses the null distance for that block.

        Raises:
            ShapeError: If the blocks do not share their row count or A_N is not square
            RankDeficiencyError: If A_N is singular
            DomainError: If a weight is negative or a generator has no block solver
        """
        if len(a_blocks) != len(bregmans):
            raise ShapeError(f"{len(a_blocks)} blocks but {len(bregmans)} Bregman generators")
        if not a_blocks:
            raise ShapeError("linear system needs at least one block")
        mats = [as_matrix(a, f"A[{i}]") for i, a in enumerate(a_blocks)]
        last = mats[-1]
        if last.shape[0] != last.shape[1]:
            raise ShapeError(f"last block must be square, got {last.shape}")
        if numerical_rank(last) < last.shape[0]:
            raise RankDeficiencyError("last block is singular")

        names = LinearSystemService.block_names(len(mats))
        blocks = []
        for i, (a, value, name) in enumerate(zip(mats, bregmans, names)):
            bregman = _as_bregman(value, name)
            is_last = i == len(mats) - 1
            blocks.append(BlockSpec(
                name=name,
                constraint_matrix=a,
                objective_value=_zero_objective,
                subproblem_solver=_block_solver(a, bregman, name),
                bregman=bregman,
                objective_smooth_lipschitz=0.0 if is_last else None,
            ))
        return ProblemSpec(
            blocks=tuple(blocks),
            alpha=float(alpha),
            alpha_schedule=alpha_schedule,
            checked=checked,
        )

    @staticmethod
    def random_init(spec: ProblemSpec, seed: int, columns: int = 1) -> IterateState:
        """Standard Gaussian starting blocks from a seeded generator, p = 0; absolute values on positive-orthant blocks."""
        rng = np.random.default_rng(seed)
        xs = []
        for b in spec.blocks:
            x = rng.standard_normal((b.cols, columns))
            xs.append(np.abs(x) if b.bregman.domain_tag == DomainTag.POSITIVE_ORTHANT else x)
        return IterateState.initial(spec, xs)

    @staticmethod
    def solve(
        spec: ProblemSpec,
        init: IterateState,
        stop: Optional[StoppingRule] = None,
        audit: bool = False,
    ) -> Tuple[IterateState, Trace]:
        """Run the engine and log the final residual ||Σ A_i x_i||."""
        state, trace = EngineService.run(spec, init, stop, audit=audit)
        if trace.last is not None:
            logger.info("linear_system_solved", iterations=len(trace), residual=trace.last.primal_res)
        return state, trace
