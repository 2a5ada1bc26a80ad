"""Low-rank + sparse + noise decomposition: closed-form fused path and engine mapping."""
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import structlog

from core.errors import DomainError
from models.diagnostics import DescentConstants
from models.matrix import Matrix, as_matrix, require_same_shape
from models.problem import BlockSpec, ProblemSpec, SubproblemContext
from models.rpca import (
    SIMULATION_LAMBDA_SCALE,
    VIDEO_LAMBDA_SCALE,
    RpcaConfig,
    RpcaState,
    SweepPoint,
    SweepResult,
)
from models.trace import StepRecord, Trace
from services.parameter_service import ParameterService
from utils.bregman import null_distance, squared_euclidean
from utils.linalg import best_rank_approximation
from utils.prox import half_quasi_norm, half_shrink_matrix, nuclear_norm, svt

logger = structlog.get_logger(__name__)

BLOCK_NAMES = ("L", "S", "T")


def _sq(m: Matrix) -> float:
    return float(np.vdot(m, m))


def _bregman(gamma: float):
    return squared_euclidean(gamma) if gamma > 0.0 else null_distance()


class RpcaService:
    """Closed-form Bregman ADMM for T - L - S = 0 with ||L||_*, λΣ|S|^{1/2} and (μ/2)||T - M||²."""

    @staticmethod
    def default_lambda(shape: Tuple[int, int], video: bool = False) -> float:
        scale = VIDEO_LAMBDA_SCALE if video else SIMULATION_LAMBDA_SCALE
        return scale / max(shape)

    @staticmethod
    def resolve(cfg: RpcaConfig, m_obs: Matrix, video: bool = False) -> RpcaConfig:
        """Fill lambda from the data when unset."""
        update = {}
        if cfg.lambda_ is None:
            update["lambda_"] = RpcaService.default_lambda(m_obs.shape, video)
        return cfg.model_copy(update=update) if update else cfg

    @staticmethod
    def gammas(cfg: RpcaConfig, alpha: float) -> Tuple[float, float]:
        """(γ₁, γ₂) at penalty α."""
        g1 = alpha if cfg.gamma1 is None else cfg.gamma1
        g2 = alpha + cfg.mu if cfg.gamma2 is None else cfg.gamma2
        return float(g1), float(g2)

    @staticmethod
    def rpca_init(m_obs: Matrix, cfg: RpcaConfig) -> RpcaState:
        """
        L = best rank-r approximation of M with r = max(1, ceil(init_rank_fraction·min(m, n))),
        S = 0, T = L, p = 0.

        Raises:
            NumericalError: If M is not finite or the SVD fails
        """
        m_obs = as_matrix(m_obs, "observation")
        cfg = RpcaService.resolve(cfg, m_obs)
        rank = max(1, math.ceil(cfg.init_rank_fraction * min(m_obs.shape)))
        l = best_rank_approximation(m_obs, rank)
        zeros = np.zeros_like(m_obs)
        return RpcaState(
            l=l,
            s=zeros.copy(),
            t=l.copy(),
            p=zeros.copy(),
            alpha_current=float(cfg.alpha0),
            prev_t=l.copy(),
        )

    @staticmethod
    def rpca_step(state: RpcaState, cfg: RpcaConfig, m_obs: Matrix) -> RpcaState:
        """
        One sweep of the closed-form updates, then the penalty schedule.

        L ← SVT((α(T - S + p/α) + γ₁L)/(α + γ₁), 1/(α + γ₁))
        S ← half_shrink((α(T - L + p/α) + γ₁S)/(α + γ₁), λ/(α + γ₁))
        T ← (μM + α(L + S - p/α) + γ₂T)/(μ + α + γ₂)
        p ← p + α(T - L - S)

        Expects a resolved config (lambda set).

        Raises:
            DomainError: If lambda is unset
        """
        if cfg.lambda_ is None:
            raise DomainError("rpca_step needs a resolved config; call RpcaService.resolve first")
        alpha = state.alpha_current
        g1, g2 = RpcaService.gammas(cfg, alpha)
        shift = state.p / alpha

        target_l = state.t - state.s + shift
        l = svt((alpha * target_l + g1 * state.l) / (alpha + g1), 1.0 / (alpha + g1))

        target_s = state.t - l + shift
        s = half_shrink_matrix((alpha * target_s + g1 * state.s) / (alpha + g1), cfg.lambda_ / (alpha + g1))

        target_t = l + s - shift
        t = (cfg.mu * m_obs + alpha * target_t + g2 * state.t) / (cfg.mu + alpha + g2)

        p = state.p + alpha * (t - l - s)

        next_alpha = alpha
        if cfg.schedule:
            next_alpha = min(alpha * cfg.alpha_growth, cfg.alpha_max)
            if next_alpha == cfg.alpha_max and alpha < cfg.alpha_max:
                logger.info("rpca_alpha_saturated", iteration=state.iteration + 1, alpha=next_alpha)
        return RpcaState(
            l=l,
            s=s,
            t=t,
            p=p,
            alpha_current=float(next_alpha),
            prev_t=state.t,
            iteration=state.iteration + 1,
        )

    @staticmethod
    def rpca_objective(state: RpcaState, cfg: RpcaConfig, m_obs: Matrix) -> float:
        """||L||_* + λΣ|S|^{1/2} + (μ/2)||T - M||_F²."""
        return (
            nuclear_norm(state.l)
            + cfg.lambda_ * half_quasi_norm(state.s)
            + 0.5 * cfg.mu * _sq(state.t - m_obs)
        )

    @staticmethod
    def rpca_constants(cfg: RpcaConfig, alpha: float) -> DescentConstants:
        """σ_C = 1, ℓ_h = μ, ℓ_φ = γ₂, moduli (γ₁, γ₁, max(μ, γ₂))."""
        g1, g2 = RpcaService.gammas(cfg, alpha)
        return DescentConstants(
            sigma_c=1.0,
            ell_h=cfg.mu,
            ell_phi=g2,
            block_moduli=[g1, g1, max(cfg.mu, g2)],
            alpha=alpha,
        )

    @staticmethod
    def rpca_spec(m_obs: Matrix, cfg: RpcaConfig, alpha: float, checked: bool = True) -> ProblemSpec:
        """
        The model as an engine ProblemSpec with blocks L, S, T and constraint
        -L - S + T = 0 (A = -I, B = -I, C = I), γ's taken at α.

        Each block solver minimizes against target = -Aᵢᵀ(rest + p/α).
        """
        m_obs = as_matrix(m_obs, "observation")
        cfg = RpcaService.resolve(cfg, m_obs)
        g1, g2 = RpcaService.gammas(cfg, alpha)
        rows = m_obs.shape[0]
        eye = np.eye(rows)
        lam = float(cfg.lambda_)
        mu = float(cfg.mu)

        def solve_l(ctx: SubproblemContext) -> Matrix:
            target = ctx.shifted_rest()
            a = ctx.alpha
            return svt((a * target + g1 * ctx.x_prev) / (a + g1), 1.0 / (a + g1))

        def solve_s(ctx: SubproblemContext) -> Matrix:
            target = ctx.shifted_rest()
            a = ctx.alpha
            return half_shrink_matrix((a * target + g1 * ctx.x_prev) / (a + g1), lam / (a + g1))

        def solve_t(ctx: SubproblemContext) -> Matrix:
            target = -ctx.shifted_rest()
            a = ctx.alpha
            return (mu * m_obs + a * target + g2 * ctx.x_prev) / (mu + a + g2)

        blocks = (
            BlockSpec(
                name="L",
                constraint_matrix=-eye,
                objective_value=nuclear_norm,
                subproblem_solver=solve_l,
                bregman=_bregman(g1),
            ),
            BlockSpec(
                name="S",
                constraint_matrix=-eye,
                objective_value=lambda s: lam * half_quasi_norm(s),
                subproblem_solver=solve_s,
                bregman=_bregman(g1),
            ),
            BlockSpec(
                name="T",
                constraint_matrix=eye,
                objective_value=lambda t: 0.5 * mu * _sq(t - m_obs),
                subproblem_solver=solve_t,
                bregman=_bregman(g2),
                objective_smooth_lipschitz=mu,
                objective_strong_convexity=mu,
            ),
        )
        return ProblemSpec(blocks=blocks, alpha=float(alpha), checked=checked)

    @staticmethod
    def stationarity(prev: RpcaState, new: RpcaState, cfg: RpcaConfig, alpha: float, sigma0: float) -> Dict[str, float]:
        """Block residual norms of the generic stationarity expressions specialized to A = B = -I, C = I."""
        g1, g2 = RpcaService.gammas(cfg, alpha)
        dp = new.p - prev.p
        dl, ds, dt = new.l - prev.l, new.s - prev.s, new.t - prev.t
        res_l = -dp + alpha * (ds - dt) - g1 * dl
        res_s = -dp - alpha * dt - g1 * ds
        res_t = dp - g2 * dt + 2.0 * sigma0 * dt
        return {
            "L": float(np.linalg.norm(res_l)),
            "S": float(np.linalg.norm(res_s)),
            "T": float(np.linalg.norm(res_t)),
            "primal": float(np.linalg.norm(new.t - new.l - new.s)),
        }

    @staticmethod
    def relerr(estimate: Matrix, truth: Matrix) -> float:
        """
        ||estimate - truth||_F / ||truth||_F.

        Raises:
            DomainError: If truth is zero
        """
        estimate = np.asarray(estimate, dtype=np.float64)
        truth = np.asarray(truth, dtype=np.float64)
        require_same_shape(estimate, truth, "relErr operands")
        denom = float(np.linalg.norm(truth))
        if denom == 0.0:
            raise DomainError("relErr is undefined for a zero ground truth")
        return float(np.linalg.norm(estimate - truth)) / denom

    @staticmethod
    def _record(
        prev: RpcaState,
        new: RpcaState,
        cfg: RpcaConfig,
        m_obs: Matrix,
        truth: Optional[Dict[str, Matrix]],
    ) -> StepRecord:
        alpha = prev.alpha_current
        residual = new.t - new.l - new.s
        objective = RpcaService.rpca_objective(new, cfg, m_obs)
        lagrangian = objective + float(np.vdot(new.p, residual)) + 0.5 * alpha * _sq(residual)

        constants = RpcaService.rpca_constants(cfg, alpha)
        sigma0, _ = ParameterService.sigma_from_constants(constants)
        lhat = lagrangian + sigma0 * _sq(new.t - new.prev_t)
        stationarity = RpcaService.stationarity(prev, new, cfg, alpha, sigma0)

        steps = [new.l - prev.l, new.s - prev.s, new.t - prev.t]
        num = sum(_sq(d) for d in steps)
        den = _sq(prev.l) + _sq(prev.s) + _sq(prev.t)
        dp = new.p - prev.p

        rel_err: Dict[str, Optional[float]] = {}
        for name, est in zip(BLOCK_NAMES, (new.l, new.s, new.t)):
            if truth and name in truth:
                ref = truth[name]
                rel_err[name] = None if not np.any(ref) else RpcaService.relerr(est, ref)

        return StepRecord(
            iteration=new.iteration,
            alpha=alpha,
            objective=objective,
            lagrangian=lagrangian,
            lhat=lhat,
            relchg=float(math.sqrt(num) / (math.sqrt(den) + 1.0)),
            rel_err=rel_err,
            primal_res=stationarity["primal"],
            stationarity_res=max(stationarity[n] for n in BLOCK_NAMES),
            multiplier_step=float(np.linalg.norm(dp)),
            multiplier_norm=float(np.linalg.norm(new.p)),
            multiplier_identity=float(np.linalg.norm(dp - alpha * residual)),
            block_steps=[float(np.linalg.norm(d)) for d in steps],
        )

    @staticmethod
    def rpca_solve(
        m_obs: Matrix,
        cfg: RpcaConfig,
        truth: Optional[Dict[str, Matrix]] = None,
        video: bool = False,
    ) -> Tuple[RpcaState, Trace]:
        """
        Initialize and iterate until relChg < cfg.relchg_threshold or cfg.max_iterations.

        Args:
            m_obs: Observation M
            cfg: Model parameters; unset values are resolved from M
            truth: Ground truth keyed "L", "S", "T" for the relErr columns
            video: Use the frame-sequence default for lambda

        Returns:
            Tuple of (final state, trace)
        """
        m_obs = as_matrix(m_obs, "observation")
        cfg = RpcaService.resolve(cfg, m_obs, video)
        state = RpcaService.rpca_init(m_obs, cfg)
        trace = Trace(
            block_names=BLOCK_NAMES,
            header={
                "rows": m_obs.shape[0],
                "cols": m_obs.shape[1],
                "lambda": cfg.lambda_,
                "mu": cfg.mu,
                "gamma1": "alpha" if cfg.gamma1 is None else cfg.gamma1,
                "gamma2": "alpha+mu" if cfg.gamma2 is None else cfg.gamma2,
                "alpha0": cfg.alpha0,
                "alpha_growth": cfg.alpha_growth if cfg.schedule else None,
                "alpha_max": cfg.alpha_max,
            },
        )
        if not cfg.schedule:
            report = ParameterService.validate_alpha_constants(RpcaService.rpca_constants(cfg, cfg.alpha0))
            if not report.passed:
                logger.warning("alpha_below_descent_threshold", alpha=cfg.alpha0, threshold=report.threshold)

        logger.info(
            "rpca_solve_started",
            shape=m_obs.shape,
            lambda_=cfg.lambda_,
            mu=cfg.mu,
            alpha0=cfg.alpha0,
            max_iterations=cfg.max_iterations,
        )
        while len(trace) < cfg.max_iterations:
            new_state = RpcaService.rpca_step(state, cfg, m_obs)
            record = RpcaService._record(state, new_state, cfg, m_obs, truth)
            trace.append(record)
            state = new_state
            logger.debug("rpca_step", iteration=record.iteration, relchg=record.relchg, objective=record.objective)
            if record.relchg < cfg.relchg_threshold:
                break

        last = trace.last
        logger.info(
            "rpca_solve_finished",
            iterations=len(trace),
            relchg=last.relchg if last else None,
            rel_err=last.rel_err if last else None,
        )
        return state, trace

    @staticmethod
    def sweep_mu(
        m_obs: Matrix,
        cfg: RpcaConfig,
        mus: Sequence[float],
        truth: Dict[str, Matrix],
    ) -> SweepResult:
        """Solve once per μ and report relErr_L / relErr_S; best μ minimizes relErr_L, then relErr_S."""
        if not mus:
            raise DomainError("sweep needs at least one mu value")
        result = SweepResult()
        for mu in mus:
            _, trace = RpcaService.rpca_solve(m_obs, cfg.model_copy(update={"mu": float(mu)}), truth)
            last = trace.last
            result.points.append(SweepPoint(
                mu=float(mu),
                rel_err_l=last.rel_err.get("L") if last else None,
                rel_err_s=last.rel_err.get("S") if last else None,
                iterations=len(trace),
                final_relchg=last.relchg if last else None,
            ))
        ranked = [p for p in result.points if p.rel_err_l is not None]
        if ranked:
            best = min(ranked, key=lambda p: (p.rel_err_l, p.rel_err_s if p.rel_err_s is not None else math.inf))
            result.best_mu = best.mu
        logger.info("rpca_sweep_finished", mus=list(mus), best_mu=result.best_mu)
        return result
