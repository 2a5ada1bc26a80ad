"""Generic N-block Bregman ADMM engine."""
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from core.config import settings
from core.errors import BadmmError, DomainError, SolverError
from models.diagnostics import DescentConstants
from models.matrix import Matrix
from models.problem import EngineMode, IterateState, ProblemSpec, StoppingRule, SubproblemContext
from models.trace import StepRecord, Trace
from services.diagnostics_service import DiagnosticsService
from services.parameter_service import ParameterService

logger = structlog.get_logger(__name__)


def _block_sum(spec: ProblemSpec, xs: Sequence[Matrix], skip: Optional[int] = None) -> Matrix:
    """Σ_{j≠skip} A_j x_j, summed in block order."""
    total = None
    for j, (block, xj) in enumerate(zip(spec.blocks, xs)):
        if j == skip:
            continue
        term = block.constraint_matrix @ xj
        total = term if total is None else total + term
    if total is None:
        return np.zeros((spec.constraint_rows, xs[0].shape[1]))
    return total


def _rel_err(x: Matrix, truth: Matrix) -> Optional[float]:
    denom = float(np.linalg.norm(truth))
    if denom == 0.0:
        return None
    return float(np.linalg.norm(x - truth)) / denom


class EngineService:
    """The Bregman ADMM recursion, its Lagrangian and merit function."""

    @staticmethod
    def objective(spec: ProblemSpec, state: IterateState) -> float:
        """Σ f_i(x_i)."""
        return float(sum(b.objective_value(x) for b, x in zip(spec.blocks, state.x)))

    @staticmethod
    def primal_residual(spec: ProblemSpec, state: IterateState) -> float:
        """||Σ A_i x_i||."""
        return float(np.linalg.norm(_block_sum(spec, state.x)))

    @staticmethod
    def augmented_lagrangian(spec: ProblemSpec, state: IterateState) -> float:
        """
        L_α = Σ f_i + <p, Σ A_i x_i> + (α/2)||Σ A_i x_i||² with α = state.alpha_current.

        In BADM mode there is no multiplier or penalty and the value is Σ f_i.
        """
        value = EngineService.objective(spec, state)
        if spec.mode == EngineMode.UNCONSTRAINED_BADM:
            return value
        residual = _block_sum(spec, state.x)
        if residual.shape != state.p.shape:
            raise DomainError(f"multiplier shape {state.p.shape} does not match constraint {residual.shape}")
        value += float(np.vdot(state.p, residual))
        value += 0.5 * state.alpha_current * float(np.vdot(residual, residual))
        return value

    @staticmethod
    def merit_lhat(
        spec: ProblemSpec,
        state: IterateState,
        constants: Optional[DescentConstants] = None,
    ) -> float:
        """
        L̂ = L_α + σ_0||x_N - x̂_N||², σ_0 taken at state.alpha_current.

        Raises:
            DomainError: If the descent constants are unavailable
            RankDeficiencyError: If σ_C = 0
        """
        if constants is None:
            constants = ParameterService.descent_constants(spec)
        sigma0, _ = ParameterService.sigma_from_constants(constants, state.alpha_current)
        gap = state.x[-1] - state.prev_last_block
        return EngineService.augmented_lagrangian(spec, state) + sigma0 * float(np.vdot(gap, gap))

    @staticmethod
    def relchg(prev: IterateState, nxt: IterateState) -> float:
        """√(Σ||Δx_i||²) / (√(Σ||x_i^k||²) + 1)."""
        num = sum(float(np.vdot(b - a, b - a)) for a, b in zip(prev.x, nxt.x))
        den = sum(float(np.vdot(a, a)) for a in prev.x)
        return float(np.sqrt(num) / (np.sqrt(den) + 1.0))

    @staticmethod
    def audit_block(ctx: SubproblemContext, x_new: Matrix, iteration: int) -> None:
        """
        Perturb the returned block iterate in random directions and check the
        subproblem objective does not decrease.

        Directions leaving the Bregman domain are skipped.

        Raises:
            SolverError: If a perturbation lowers the objective beyond tolerance
        """
        f0 = ctx.objective(x_new)
        radius = 1e-4 * (1.0 + float(np.linalg.norm(x_new)))
        tol = settings.SOLVER_AUDIT_TOLERANCE * (1.0 + abs(f0))
        n_blocks = len(ctx.iterates)
        rng = np.random.default_rng(settings.SOLVER_AUDIT_SEED + iteration * n_blocks + ctx.index)
        for _ in range(settings.SOLVER_AUDIT_DIRECTIONS):
            d = rng.standard_normal(x_new.shape)
            d *= radius / float(np.linalg.norm(d))
            try:
                f1 = ctx.objective(x_new + d)
            except DomainError:
                continue
            if f1 < f0 - tol:
                logger.warning(
                    "solver_audit_failed",
                    block=ctx.block.name,
                    iteration=iteration,
                    objective=f0,
                    perturbed=f1,
                )
                raise SolverError(
                    ctx.block.name,
                    f"returned point is not a minimizer: objective {f0!r} decreases to {f1!r}",
                )

    @staticmethod
    def step(
        spec: ProblemSpec,
        state: IterateState,
        constants: Optional[DescentConstants] = None,
        truth: Optional[Dict[str, Matrix]] = None,
        audit: bool = False,
    ) -> Tuple[IterateState, StepRecord]:
        """
        One Gauss-Seidel sweep over the blocks followed by the multiplier update.

        Block i sees x_j^{k+1} for j < i and x_j^k for j > i. In BADM mode each
        block minimizes f_i + D_phi_i(., x_i^k) and the multiplier is untouched.

        Args:
            spec: Problem specification
            state: Current iterate
            constants: Descent constants; when given the record carries L̂
            truth: Ground truth per block name for relErr columns
            audit: Run the perturbation audit on every block update

        Returns:
            Tuple of (new state, step record)

        Raises:
            SolverError: If a block solver fails or returns a malformed iterate
        """
        constrained = spec.mode == EngineMode.CONSTRAINED
        alpha = state.alpha_current
        ctx_alpha = alpha if constrained else 0.0
        ctx_p = state.p if constrained else np.zeros_like(state.p)
        iteration = state.iteration + 1
        xs: List[Matrix] = list(state.x)

        for i, block in enumerate(spec.blocks):
            ctx = SubproblemContext(
                index=i,
                block=block,
                x_prev=state.x[i],
                rest=_block_sum(spec, xs, skip=i),
                p=ctx_p,
                alpha=ctx_alpha,
                iterates=tuple(xs),
            )
            try:
                x_new = np.asarray(block.subproblem_solver(ctx), dtype=np.float64)
            except SolverError:
                raise
            except (BadmmError, ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
                raise SolverError(block.name, str(e)) from e
            if x_new.shape != state.x[i].shape:
                raise SolverError(block.name, f"solver returned shape {x_new.shape}, expected {state.x[i].shape}")
            if not np.all(np.isfinite(x_new)):
                raise SolverError(block.name, "solver returned non-finite entries")
            if audit:
                EngineService.audit_block(ctx, x_new, iteration)
            xs[i] = x_new

        residual = _block_sum(spec, xs)
        if constrained:
            p_new = state.p + alpha * residual
            dp = p_new - state.p
            identity = float(np.linalg.norm(dp - alpha * residual))
        else:
            p_new = state.p
            dp = np.zeros_like(state.p)
            identity = 0.0

        new_state = IterateState(
            x=tuple(xs),
            p=p_new,
            prev_last_block=state.x[-1],
            iteration=iteration,
            alpha_current=alpha,
        )

        lhat = None
        sigma0 = 0.0
        if constants is not None:
            sigma0, _ = ParameterService.sigma_from_constants(constants, alpha)
            lhat = EngineService.merit_lhat(spec, new_state, constants)
        stationarity = DiagnosticsService.stationarity_residual(spec, new_state, state, sigma0, alpha)
        block_res = [v for k, v in stationarity.items() if k != "primal"]

        rel_err: Dict[str, Optional[float]] = {}
        if truth:
            for block, x in zip(spec.blocks, xs):
                if block.name in truth:
                    rel_err[block.name] = _rel_err(x, truth[block.name])

        record = StepRecord(
            iteration=iteration,
            alpha=alpha,
            objective=EngineService.objective(spec, new_state),
            lagrangian=EngineService.augmented_lagrangian(spec, new_state),
            lhat=lhat,
            relchg=EngineService.relchg(state, new_state),
            rel_err=rel_err,
            primal_res=float(np.linalg.norm(residual)) if constrained else 0.0,
            stationarity_res=max(block_res) if block_res else None,
            multiplier_step=float(np.linalg.norm(dp)),
            multiplier_norm=float(np.linalg.norm(p_new)),
            multiplier_identity=identity,
            block_steps=[float(np.linalg.norm(b - a)) for a, b in zip(state.x, xs)],
        )
        logger.debug("engine_step", iteration=iteration, relchg=record.relchg, alpha=alpha)
        return new_state, record

    @staticmethod
    def run(
        spec: ProblemSpec,
        init: IterateState,
        stop: Optional[StoppingRule] = None,
        truth: Optional[Dict[str, Matrix]] = None,
        audit: bool = False,
    ) -> Tuple[IterateState, Trace]:
        """
        Iterate until relChg < threshold or the iteration cap.

        In checked mode the structural requirements are enforced and a penalty
        below the descent threshold is logged as a warning. The penalty
        schedule, when configured, is applied after each step.

        Raises:
            DomainError: Checked mode on a block without strong convexity
            RankDeficiencyError: Checked mode with a rank-deficient last block
            SolverError: Block failure; the partial trace is attached
        """
        stop = stop or StoppingRule()
        trace = Trace(block_names=spec.block_names)
        constants = None
        if spec.checked:
            constants = ParameterService.require_checkable(spec)
            report = ParameterService.validate_alpha(spec)
            if not report.passed:
                logger.warning(
                    "alpha_below_descent_threshold",
                    alpha=spec.alpha,
                    threshold=report.threshold,
                )

        logger.info(
            "engine_run_started",
            blocks=list(spec.block_names),
            mode=spec.mode.value,
            alpha=init.alpha_current,
            max_iterations=stop.max_iterations,
        )
        state = init
        while len(trace) < stop.max_iterations:
            try:
                state, record = EngineService.step(spec, state, constants, truth, audit)
            except SolverError as e:
                e.trace = trace
                logger.error("engine_solver_failed", block=e.block_name, iteration=state.iteration + 1)
                raise
            trace.append(record)
            if record.relchg < stop.relchg_threshold:
                break
            if spec.alpha_schedule is not None:
                state = replace(state, alpha_current=spec.alpha_schedule.next_alpha(state.alpha_current))

        last = trace.last
        logger.info(
            "engine_run_finished",
            iterations=len(trace),
            relchg=last.relchg if last else None,
            objective=last.objective if last else None,
        )
        return state, trace
