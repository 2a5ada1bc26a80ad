"""Validation and diagnostics report types."""
from typing import List, Optional
import enum

from pydantic import BaseModel, Field


class ConditionStatus(str, enum.Enum):
    """Outcome of one parameter condition."""
    PASSED = "passed"
    FAILED = "failed"
    ASSERTED = "asserted by model, not verified"


class ConditionResult(BaseModel):
    """One named condition of a validator."""

    name: str
    status: ConditionStatus
    detail: str = ""


class ValidationReport(BaseModel):
    """Result of a parameter validator. Validators report, they never raise on a failed condition."""

    name: str
    passed: bool
    threshold: Optional[float] = Field(None, description="Critical value the penalty must exceed")
    value: Optional[float] = Field(None, description="Penalty value that was checked")
    conditions: List[ConditionResult] = Field(default_factory=list)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        lines = [f"{self.name}: {verdict}"]
        if self.threshold is not None:
            lines.append(f"  threshold = {self.threshold!r}, alpha = {self.value!r}")
        for c in self.conditions:
            lines.append(f"  [{c.status.value}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        return "\n".join(lines)


class DescentConstants(BaseModel):
    """
    Constants entering sigma_0, sigma_1 and the penalty thresholds.

    block_moduli lists the effective strong-convexity modulus of every block,
    the last entry being the smooth last block.
    """

    sigma_c: float = Field(..., ge=0.0, description="λ_min(A_N A_Nᵀ)")
    ell_h: float = Field(..., ge=0.0, description="Lipschitz constant of grad f_N")
    ell_phi: float = Field(..., ge=0.0, description="Lipschitz constant of grad phi_N")
    block_moduli: List[float] = Field(..., min_length=1)
    alpha: float = Field(..., gt=0.0)

    @property
    def mu_last(self) -> float:
        return self.block_moduli[-1]


class CheckResult(BaseModel):
    """One diagnostics check evaluated along a trace."""

    name: str
    iterations: List[int] = Field(default_factory=list)
    margins: List[float] = Field(default_factory=list, description="Nonnegative means the inequality holds")
    violation_count: int = 0
    worst_margin: Optional[float] = None
    assertable: bool = True
    note: str = ""


class SummabilityReport(BaseModel):
    """Running sums of step lengths and a heuristic finiteness reading."""

    sq_partial_sums: List[float] = Field(default_factory=list)
    l1_partial_sums: List[float] = Field(default_factory=list)
    last_quartile_growth_ratio: Optional[float] = None
    consistent: bool = False
    label: str = ""


class DiagnosticsReport(BaseModel):
    """All checks for one trace."""

    checks: List[CheckResult] = Field(default_factory=list)
    summability: Optional[SummabilityReport] = None
    verdict: str = "pass"

    @property
    def violations(self) -> List[CheckResult]:
        return [c for c in self.checks if c.assertable and c.violation_count > 0]

    @property
    def passed(self) -> bool:
        return not self.violations
