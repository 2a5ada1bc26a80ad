"""Per-iteration trace records."""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field


class StepRecord(BaseModel):
    """One completed step. Norms are Frobenius norms."""

    iteration: int = Field(..., ge=1, description="Index k+1 of the iterate produced by this step")
    alpha: float = Field(..., description="Penalty used by this step")
    objective: float = Field(..., description="Σ f_i at the new iterate")
    lagrangian: float = Field(..., description="Augmented Lagrangian L_α at the new iterate")
    lhat: Optional[float] = Field(None, description="Merit L̂; None when constants are unavailable")
    relchg: float = Field(..., description="Relative iterate change")
    rel_err: Dict[str, Optional[float]] = Field(default_factory=dict, description="relErr per block name")
    primal_res: float = Field(..., description="||Σ A_i x_i||")
    stationarity_res: Optional[float] = Field(None, description="Largest stationarity residual norm")
    multiplier_step: float = Field(0.0, description="||p^{k+1} - p^k||")
    multiplier_norm: float = Field(0.0, description="||p^{k+1}||")
    multiplier_identity: float = Field(0.0, description="||(p^{k+1} - p^k) - α Σ A_i x_i^{k+1}||")
    block_steps: List[float] = Field(default_factory=list, description="||x_i^{k+1} - x_i^k|| per block")

    @property
    def step_sq_sum(self) -> float:
        return float(sum(s * s for s in self.block_steps))


@dataclass
class Trace:
    """Append-only sequence of StepRecords plus run metadata."""

    block_names: Sequence[str]
    header: Dict[str, Any] = field(default_factory=dict)
    records: List[StepRecord] = field(default_factory=list)

    def append(self, record: StepRecord) -> None:
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("trace records must have increasing iteration numbers")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def last(self) -> Optional[StepRecord]:
        return self.records[-1] if self.records else None

    def column(self, name: str) -> List[Any]:
        return [getattr(r, name) for r in self.records]
