"""Pydantic schemas for command run configurations and problem spec files."""
from typing import List, Optional
import enum

from pydantic import BaseModel, Field, model_validator

from core.config import settings
from models.diagnostics import DescentConstants
from models.rpca import MU_CANDIDATES, RpcaConfig


class TraceFormat(str, enum.Enum):
    """Trace file format."""
    CSV = "csv"
    JSONL = "jsonl"


class SimulateConfig(BaseModel):
    """Synthetic decomposition experiment."""
    m: int = Field(200, ge=1, description="Rows of M")
    n: Optional[int] = Field(None, ge=1, description="Columns of M, defaults to m")
    rank: int = Field(5, ge=0, description="Rank of the low-rank part")
    sparsity: float = Field(settings.DEFAULT_SPARSITY, ge=0.0, le=1.0, description="Fraction of nonzeros in S")
    magnitude: float = Field(settings.DEFAULT_MAGNITUDE, ge=0.0, description="Sparse entries lie in [-magnitude, magnitude]")
    sigma: float = Field(0.0, ge=0.0, description="Noise standard deviation")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="64-bit generator seed")
    out: str = Field("out", description="Output directory")
    trace_format: TraceFormat = Field(TraceFormat.CSV)
    rpca: RpcaConfig = Field(default_factory=RpcaConfig)

    @model_validator(mode="after")
    def check_rank(self) -> "SimulateConfig":
        if self.rank > min(self.m, self.n or self.m):
            raise ValueError(f"rank {self.rank} exceeds min(m, n)")
        return self


class SweepMuConfig(SimulateConfig):
    """Simulation repeated over a grid of μ values."""
    mus: List[float] = Field(default_factory=lambda: list(MU_CANDIDATES), min_length=1)


class BgsubConfig(BaseModel):
    """Background subtraction on a directory of PGM frames."""
    frames: str = Field(..., description="Directory of equal-sized 8-bit P5 frames")
    out: str = Field("out", description="Output directory")
    max_frames: Optional[int] = Field(None, ge=1, description="Use at most this many frames, in name order")
    trace_format: TraceFormat = Field(TraceFormat.CSV)
    rpca: RpcaConfig = Field(default_factory=RpcaConfig)


class LinearBlockFile(BaseModel):
    """One block of a linear system: matrix file and Bregman generator."""
    matrix: str = Field(..., description="Path to a CSV or BMAT matrix")
    gamma: float = Field(1.0, ge=0.0, description="Squared-Euclidean Bregman weight, 0 for none")
    bregman: Optional[str] = Field(
        None,
        description="Generator name (sq_euclid:<gamma>, mahalanobis:<matrix-file>, itakura_saito, "
        "kullback_leibler, none); overrides gamma",
    )


class SolveLinearConfig(BaseModel):
    """Block-split linear system run."""
    blocks: List[LinearBlockFile] = Field(..., min_length=1)
    alpha: float = Field(10.0, gt=0.0)
    alpha_growth: Optional[float] = Field(None, gt=1.0, description="Enables the penalty schedule")
    alpha_max: float = Field(settings.DEFAULT_ALPHA_MAX, gt=0.0)
    checked: bool = True
    seed: int = Field(0, ge=0, lt=2 ** 64)
    relchg_threshold: float = Field(settings.DEFAULT_RELCHG_THRESHOLD, ge=0.0)
    max_iterations: int = Field(10000, ge=0)
    audit: bool = False
    out: Optional[str] = Field(None, description="Output directory for the trace and block iterates")
    trace_format: TraceFormat = Field(TraceFormat.CSV)


class ProblemSpecFile(BaseModel):
    """
    Problem description for diagnose: either the descent constants directly
    or the linear-system blocks they are computed from.
    """
    constants: Optional[DescentConstants] = None
    blocks: Optional[List[LinearBlockFile]] = None
    alpha: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def check_source(self) -> "ProblemSpecFile":
        if (self.constants is None) == (self.blocks is None):
            raise ValueError("give exactly one of 'constants' or 'blocks'")
        if self.blocks is not None and self.alpha is None:
            raise ValueError("'alpha' is required with 'blocks'")
        return self


class DiagnoseConfig(BaseModel):
    """Diagnostics over a stored trace."""
    trace: str
    spec: Optional[str] = None
    report: Optional[str] = Field(None, description="Write the report as JSON here")
    margins: Optional[str] = Field(None, description="Write per-iteration margins as CSV here")
