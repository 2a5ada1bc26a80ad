"""Descent constants and penalty validators for the Bregman ADMM engine."""
import math
from typing import Optional, Tuple

import structlog

from core.errors import DomainError, RankDeficiencyError
from models.diagnostics import ConditionResult, ConditionStatus, DescentConstants, ValidationReport
from models.problem import ProblemSpec
from utils.linalg import spectral_norm_lower_bound

logger = structlog.get_logger(__name__)


def _alpha_numerator(c: DescentConstants) -> float:
    """4[(ℓ_h + ℓ_φ)² + ℓ_φ²]."""
    return 4.0 * ((c.ell_h + c.ell_phi) ** 2 + c.ell_phi ** 2)


class ParameterService:
    """Constants of the convergence analysis and the checks built on them."""

    @staticmethod
    def descent_constants(spec: ProblemSpec, alpha: Optional[float] = None) -> DescentConstants:
        """
        Collect the constants of a spec.

        Args:
            spec: Problem specification
            alpha: Penalty to record, defaults to spec.alpha

        Raises:
            DomainError: If the last block has no Lipschitz constant or a
                generator without usable constants
        """
        last = spec.last
        if last.objective_smooth_lipschitz is None:
            raise DomainError(f"last block '{last.name}' must declare objective_smooth_lipschitz")
        if not last.bregman.supports_descent_constants:
            raise DomainError(f"Bregman generator '{last.bregman.name}' has no usable descent constants")
        return DescentConstants(
            sigma_c=spectral_norm_lower_bound(last.constraint_matrix),
            ell_h=float(last.objective_smooth_lipschitz),
            ell_phi=float(last.bregman.grad_lipschitz_ell),
            block_moduli=[float(b.effective_modulus) for b in spec.blocks],
            alpha=float(spec.alpha if alpha is None else alpha),
        )

    @staticmethod
    def sigma_from_constants(c: DescentConstants, alpha: Optional[float] = None) -> Tuple[float, float]:
        """
        sigma_0 = 2ℓ_φ²/(ασ_C),
        sigma_1 = ½·min(μ_1, ..., μ_{N-1}, μ_N - 4(ℓ_h+ℓ_φ)²/(ασ_C) - 4ℓ_φ²/(ασ_C)).

        Raises:
            RankDeficiencyError: If sigma_C = 0
        """
        if c.sigma_c <= 0.0:
            raise RankDeficiencyError("last constraint matrix is not of full row rank (sigma_C = 0)")
        a = c.alpha if alpha is None else alpha
        denom = a * c.sigma_c
        sigma0 = 2.0 * c.ell_phi ** 2 / denom
        last_term = c.mu_last - 4.0 * (c.ell_h + c.ell_phi) ** 2 / denom - 4.0 * c.ell_phi ** 2 / denom
        sigma1 = 0.5 * min(list(c.block_moduli[:-1]) + [last_term])
        return sigma0, sigma1

    @staticmethod
    def sigma_constants(spec: ProblemSpec, alpha: Optional[float] = None) -> Tuple[float, float]:
        """(sigma_0, sigma_1) of a spec, generalized to N blocks."""
        c = ParameterService.descent_constants(spec, alpha)
        return ParameterService.sigma_from_constants(c)

    @staticmethod
    def alpha_threshold(c: DescentConstants) -> float:
        """4[(ℓ_h+ℓ_φ)² + ℓ_φ²]/(μ_N σ_C); infinite when μ_N σ_C = 0 and the numerator is positive."""
        numerator = _alpha_numerator(c)
        denom = c.mu_last * c.sigma_c
        if numerator == 0.0:
            return 0.0
        if denom <= 0.0:
            return math.inf
        return numerator / denom

    @staticmethod
    def validate_alpha_constants(
        c: DescentConstants,
        alpha_max: Optional[float] = None,
    ) -> ValidationReport:
        """Penalty threshold check on precomputed constants."""
        threshold = ParameterService.alpha_threshold(c)
        passed = c.alpha > threshold
        conditions = [
            ConditionResult(
                name="alpha > 4[(l_h+l_phi)^2 + l_phi^2]/(mu_N sigma_C)",
                status=ConditionStatus.PASSED if passed else ConditionStatus.FAILED,
                detail=f"alpha={c.alpha!r}, threshold={threshold!r}",
            )
        ]
        if alpha_max is not None:
            saturated = alpha_max > threshold
            conditions.append(
                ConditionResult(
                    name="alpha_max exceeds the threshold",
                    status=ConditionStatus.PASSED if saturated else ConditionStatus.FAILED,
                    detail=f"alpha_max={alpha_max!r}",
                )
            )
        return ValidationReport(
            name="penalty threshold",
            passed=passed,
            threshold=threshold,
            value=c.alpha,
            conditions=conditions,
        )

    @staticmethod
    def validate_alpha(spec: ProblemSpec) -> ValidationReport:
        """
        Check α against the penalty threshold of the descent analysis.

        Passes iff α is strictly above the threshold. With a penalty schedule
        the report also compares alpha_max against the threshold.
        """
        try:
            c = ParameterService.descent_constants(spec)
        except DomainError as e:
            return ValidationReport(
                name="penalty threshold",
                passed=False,
                value=spec.alpha,
                conditions=[ConditionResult(name="constants available", status=ConditionStatus.FAILED, detail=str(e))],
            )
        alpha_max = spec.alpha_schedule.alpha_max if spec.alpha_schedule else None
        return ParameterService.validate_alpha_constants(c, alpha_max)

    @staticmethod
    def validate_boundedness(
        spec: ProblemSpec,
        beta0: float,
        branch: Optional[str] = None,
    ) -> ValidationReport:
        """
        Evaluate the sufficient conditions for bounded iterates.

        Mechanical conditions (full row rank, positive moduli, Lipschitz
        constant present, α > α_0) are checked; coercivity, lower
        boundedness and subanalyticity are listed as asserted by the model.

        Args:
            spec: Problem specification
            beta0: The β_0 > 0 of the lower-boundedness condition on f_N
            branch: "square" (A_N square) or "coercive"; defaults to
                "square" when A_N is square, else "coercive"

        Returns:
            ValidationReport with threshold = α_0 of the selected branch
        """
        if not beta0 > 0:
            raise DomainError(f"beta0 must be positive, got {beta0}")
        last = spec.last
        rows, cols = last.constraint_matrix.shape
        if branch is None:
            branch = "square" if rows == cols else "coercive"
        if branch not in ("square", "coercive"):
            raise DomainError(f"unknown boundedness branch '{branch}'")

        conditions = []

        def mechanical(name: str, ok: bool, detail: str = "") -> None:
            conditions.append(ConditionResult(
                name=name,
                status=ConditionStatus.PASSED if ok else ConditionStatus.FAILED,
                detail=detail,
            ))

        def asserted(name: str) -> None:
            conditions.append(ConditionResult(name=name, status=ConditionStatus.ASSERTED))

        sigma_c = spectral_norm_lower_bound(last.constraint_matrix)
        mechanical("last constraint matrix has full row rank", sigma_c > 0.0, f"sigma_C={sigma_c!r}")
        moduli = [b.effective_modulus for b in spec.blocks]
        mechanical(
            "every block is strongly convex in f_i or phi_i",
            all(m > 0.0 for m in moduli),
            f"moduli={moduli!r}",
        )
        has_lipschitz = last.objective_smooth_lipschitz is not None and last.bregman.supports_descent_constants
        mechanical("grad f_N and grad phi_N are Lipschitz", has_lipschitz)
        asserted("inf f_i > -inf for the nonsmooth blocks")
        asserted(f"inf (f_N - beta0*||grad f_N||^2) > -inf with beta0={beta0!r}")
        asserted("f_1 + ... + f_{N-1} is coercive")
        asserted("f_1 + ... + f_N is subanalytic")
        if branch == "square":
            mechanical("A_N is square", rows == cols, f"shape={last.constraint_matrix.shape}")
        else:
            asserted("f_N - beta0*||grad f_N||^2 is coercive")

        alpha0 = math.inf
        if sigma_c > 0.0 and has_lipschitz and moduli[-1] > 0.0:
            c = ParameterService.descent_constants(spec)
            descent_part = _alpha_numerator(c) / c.mu_last
            if branch == "square":
                # ||A_N^{-1}||² = 1/σ_min(A_N)² = 1/σ_C
                alpha0 = max(c.ell_h, descent_part) / sigma_c
            else:
                alpha0 = max(2.0 / (beta0 * sigma_c), descent_part / sigma_c)
        alpha_ok = spec.alpha > alpha0
        mechanical(f"alpha > alpha_0 ({branch} branch)", alpha_ok, f"alpha={spec.alpha!r}, alpha_0={alpha0!r}")

        passed = all(c.status != ConditionStatus.FAILED for c in conditions)
        logger.debug("boundedness_validated", branch=branch, alpha0=alpha0, passed=passed)
        return ValidationReport(
            name="bounded iterates",
            passed=passed,
            threshold=alpha0,
            value=spec.alpha,
            conditions=conditions,
        )

    @staticmethod
    def require_checkable(spec: ProblemSpec) -> DescentConstants:
        """
        Structural requirements of checked mode.

        Raises:
            DomainError: If a block modulus is not positive or constants are unavailable
            RankDeficiencyError: If the last constraint matrix is rank deficient
        """
        weak = [b.name for b in spec.blocks if not b.effective_modulus > 0.0]
        if weak:
            raise DomainError(f"checked mode needs strongly convex f_i or phi_i; blocks without: {weak}")
        c = ParameterService.descent_constants(spec)
        if c.sigma_c <= 0.0:
            raise RankDeficiencyError(f"last block '{spec.last.name}' constraint matrix is not of full row rank")
        return c
