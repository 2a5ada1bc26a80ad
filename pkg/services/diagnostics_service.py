"""Numerical checks of the convergence inequalities along a trace."""
from typing import Dict, List, Optional

import numpy as np
import structlog

from models.diagnostics import CheckResult, DescentConstants, DiagnosticsReport, SummabilityReport
from models.problem import EngineMode, IterateState, ProblemSpec
from models.trace import Trace
from services.parameter_service import ParameterService

logger = structlog.get_logger(__name__)

DESCENT_SLACK = 1e-8
MULTIPLIER_BOUND_SLACK = 1e-10
MULTIPLIER_IDENTITY_SLACK = 1e-12
SUMMABILITY_RATIO = 0.5


def _finish(result: CheckResult) -> CheckResult:
    if result.margins:
        result.worst_margin = float(min(result.margins))
    return result


class DiagnosticsService:
    """Pure functions of (spec constants, trace) verifying the descent machinery."""

    @staticmethod
    def check_descent(trace: Trace, sigma1: float, alpha: Optional[float] = None) -> CheckResult:
        """
        Sufficient decrease of the merit function between consecutive records:
        margin_k = L̂_k - L̂_{k+1} - sigma_1·Σ_i ||x_i^{k+1} - x_i^k||².

        Only pairs of records whose penalty equals ``alpha`` (default: the
        last record's penalty) are checked, so a scheduled run is checked on
        its saturated tail. The first record is never a right-hand member
        since its multiplier was not produced by a step.
        """
        result = CheckResult(name="merit descent")
        records = trace.records
        if not records:
            result.note = "no iterations"
            return result
        if alpha is None:
            alpha = records[-1].alpha
        for prev, cur in zip(records, records[1:]):
            if prev.alpha != alpha or cur.alpha != alpha:
                continue
            if prev.lhat is None or cur.lhat is None:
                continue
            margin = prev.lhat - cur.lhat - sigma1 * cur.step_sq_sum
            result.iterations.append(cur.iteration)
            result.margins.append(float(margin))
            if margin < -DESCENT_SLACK * (1.0 + abs(prev.lhat)):
                result.violation_count += 1
        if not result.margins:
            result.note = "no fixed-penalty segment with merit values"
        return _finish(result)

    @staticmethod
    def check_multiplier_bound(trace: Trace, constants: DescentConstants) -> CheckResult:
        """
        ||p^{k+1}-p^k||² <= (2(ℓ_h+ℓ_φ)²/σ_C)||z^{k+1}-z^k||² + (2ℓ_φ²/σ_C)||z^k-z^{k-1}||²
        with z the last block, from the second record on.
        """
        result = CheckResult(name="multiplier bound")
        records = trace.records
        if not records:
            result.note = "no iterations"
            return result
        if constants.sigma_c <= 0.0:
            result.assertable = False
            result.note = "sigma_C = 0, bound undefined"
            return result
        c_now = 2.0 * (constants.ell_h + constants.ell_phi) ** 2 / constants.sigma_c
        c_prev = 2.0 * constants.ell_phi ** 2 / constants.sigma_c
        for prev, cur in zip(records, records[1:]):
            if not cur.block_steps or not prev.block_steps:
                continue
            lhs = cur.multiplier_step ** 2
            rhs = c_now * cur.block_steps[-1] ** 2 + c_prev * prev.block_steps[-1] ** 2
            margin = rhs - lhs
            floor = (MULTIPLIER_IDENTITY_SLACK * (1.0 + cur.multiplier_norm)) ** 2
            result.iterations.append(cur.iteration)
            result.margins.append(float(margin))
            if margin < -(MULTIPLIER_BOUND_SLACK * max(lhs, rhs) + floor):
                result.violation_count += 1
        return _finish(result)

    @staticmethod
    def check_multiplier_identity(trace: Trace) -> CheckResult:
        """||(p^{k+1}-p^k) - α Σ A_i x_i^{k+1}|| <= 1e-12·(1 + ||p^{k+1}||) every record."""
        result = CheckResult(name="multiplier identity")
        for r in trace.records:
            margin = MULTIPLIER_IDENTITY_SLACK * (1.0 + r.multiplier_norm) - r.multiplier_identity
            result.iterations.append(r.iteration)
            result.margins.append(float(margin))
            if margin < 0.0:
                result.violation_count += 1
        if not trace.records:
            result.note = "no iterations"
        return _finish(result)

    @staticmethod
    def check_primal_feasibility(trace: Trace) -> CheckResult:
        """
        Trend reading of ||Σ A_i x_i|| over the run. Margins are the decrease
        from the previous record; increases are counted but never asserted.
        """
        result = CheckResult(name="primal feasibility trend", assertable=False)
        records = trace.records
        for prev, cur in zip(records, records[1:]):
            margin = prev.primal_res - cur.primal_res
            result.iterations.append(cur.iteration)
            result.margins.append(float(margin))
            if margin < 0.0:
                result.violation_count += 1
        if records:
            result.note = f"primal residual {records[0].primal_res:.3e} -> {records[-1].primal_res:.3e}"
        else:
            result.note = "no iterations"
        return _finish(result)

    @staticmethod
    def stationarity_residual(
        spec: ProblemSpec,
        state: IterateState,
        prev_state: IterateState,
        sigma0: float = 0.0,
        alpha: Optional[float] = None,
    ) -> Dict[str, float]:
        """
        Norms of explicit elements of the limiting subdifferential of L̂ at state.

        For block i (Gauss-Seidel sweep from prev_state to state):
            A_iᵀΔp + α A_iᵀ Σ_{j>i} A_j Δx_j + ∇φ_i(x_i^k) - ∇φ_i(x_i^{k+1}),
        plus 2σ_0 Δx_N on the last block; "primal" is ||Σ A_i x_i^{k+1}||.
        All entries vanish at an exact feasible fixed point.

        Args:
            alpha: Penalty of the step, defaults to prev_state.alpha_current
        """
        a = prev_state.alpha_current if alpha is None else alpha
        blocks = spec.blocks
        n = len(blocks)
        deltas = [x1 - x0 for x1, x0 in zip(state.x, prev_state.x)]
        residuals: Dict[str, float] = {}
        constrained = spec.mode == EngineMode.CONSTRAINED
        dp = state.p - prev_state.p
        # trailing[i] = Σ_{j>i} A_j Δx_j
        trailing = [None] * n
        acc = np.zeros_like(state.p)
        for i in range(n - 1, -1, -1):
            trailing[i] = acc
            acc = acc + blocks[i].constraint_matrix @ deltas[i]
        for i, block in enumerate(blocks):
            g = block.bregman.grad_phi(prev_state.x[i]) - block.bregman.grad_phi(state.x[i])
            if constrained:
                at = block.constraint_matrix.T
                g = g + at @ dp + a * (at @ trailing[i])
            if i == n - 1 and sigma0:
                g = g + 2.0 * sigma0 * deltas[i]
            residuals[block.name] = float(np.linalg.norm(g))
        if constrained:
            total = sum(b.constraint_matrix @ x for b, x in zip(blocks, state.x))
            residuals["primal"] = float(np.linalg.norm(total))
        else:
            residuals["primal"] = 0.0
        return residuals

    @staticmethod
    def summability_report(trace: Trace) -> SummabilityReport:
        """
        Running sums of ||Δw||² and ||Δw|| (block steps and multiplier step).

        The growth ratio compares the increase of the ||Δw|| partial sums over
        the last quarter of the run with the increase over the preceding
        quarter. A ratio below 0.5 is labelled consistent with a finite total.
        This is a heuristic reading, not a test.
        """
        report = SummabilityReport()
        sq_total = 0.0
        l1_total = 0.0
        for r in trace.records:
            steps = list(r.block_steps) + [r.multiplier_step]
            sq_total += float(sum(s * s for s in steps))
            l1_total += float(sum(steps))
            report.sq_partial_sums.append(sq_total)
            report.l1_partial_sums.append(l1_total)
        n = len(report.l1_partial_sums)
        if n < 4:
            report.label = "too few iterations for a summability reading"
            return report
        sums = [0.0] + report.l1_partial_sums
        q = n // 4
        last_quarter = sums[n] - sums[n - q]
        previous_quarter = sums[n - q] - sums[n - 2 * q]
        if previous_quarter > 0.0:
            ratio = last_quarter / previous_quarter
        else:
            ratio = 0.0 if last_quarter == 0.0 else float("inf")
        report.last_quartile_growth_ratio = ratio
        report.consistent = ratio < SUMMABILITY_RATIO
        report.label = (
            "consistent with summability" if report.consistent else "not consistent with summability"
        )
        return report

    @staticmethod
    def run_diagnostics(trace: Trace, constants: Optional[DescentConstants] = None) -> DiagnosticsReport:
        """
        Evaluate every applicable check on a trace.

        Without constants only the multiplier identity and the summability
        reading are available.
        """
        report = DiagnosticsReport()
        if not trace.records:
            report.verdict = "no iterations"
            return report
        report.checks.append(DiagnosticsService.check_multiplier_identity(trace))
        if constants is not None:
            alpha = trace.records[-1].alpha
            if constants.sigma_c > 0.0:
                _, sigma1 = ParameterService.sigma_from_constants(constants, alpha)
                descent = DiagnosticsService.check_descent(trace, sigma1, alpha)
                if sigma1 <= 0.0:
                    descent.assertable = False
                    descent.note = f"sigma_1 = {sigma1!r} <= 0 at alpha = {alpha!r}; informative only"
                report.checks.append(descent)
            report.checks.append(DiagnosticsService.check_multiplier_bound(trace, constants))
        report.checks.append(DiagnosticsService.check_primal_feasibility(trace))
        report.summability = DiagnosticsService.summability_report(trace)
        report.verdict = "pass" if report.passed else "violations"
        logger.info(
            "diagnostics_completed",
            verdict=report.verdict,
            violations=[c.name for c in report.violations],
        )
        return report

    @staticmethod
    def format_report(report: DiagnosticsReport) -> List[str]:
        """Human-readable lines for the CLI."""
        lines = [f"verdict: {report.verdict}"]
        for c in report.checks:
            worst = "n/a" if c.worst_margin is None else f"{c.worst_margin:.3e}"
            flag = "" if c.assertable else " (informative)"
            lines.append(
                f"{c.name}{flag}: checked={len(c.margins)} violations={c.violation_count} worst_margin={worst}"
                + (f" [{c.note}]" if c.note else "")
            )
        if report.summability is not None:
            s = report.summability
            ratio = "n/a" if s.last_quartile_growth_ratio is None else f"{s.last_quartile_growth_ratio:.3e}"
            lines.append(f"summability: ratio={ratio} {s.label}")
        return lines
