"""
Run records for blockpf.

Pydantic models for per-step and per-block output of the adaptive filter.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class AdaptAction(str, Enum):
    """Particle-count action decided at a block end."""
    INCREASE = "increase"
    KEEP = "keep"
    DECREASE = "decrease"


class AdaptDecision(BaseModel):
    """Outcome of a block assessment."""
    action: AdaptAction
    evidence: Optional[float] = None
    target: Optional[int] = None


class WindowRecord(BaseModel):
    """Statistics collected over one block of W_n steps."""
    n: int = Field(ge=0)
    W_n: int = Field(ge=1)
    M_n: int = Field(ge=1)
    K: int = Field(ge=1)
    a_values: List[int]
    b_values: List[float] = Field(default_factory=list)
    p_value: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    p_value_b: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    corr: Optional[float] = Field(default=None, ge=-1.0, le=1.0)

    @field_validator("b_values")
    @classmethod
    def validate_b_values(cls, v: List[float]) -> List[float]:
        if any(b < 0.0 or b > 1.0 for b in v):
            raise ValueError("b values must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def validate_lengths(self) -> "WindowRecord":
        if len(self.a_values) != self.W_n:
            raise ValueError("a_values length must equal W_n")
        if any(a < 0 or a > self.K for a in self.a_values):
            raise ValueError("a values must lie in {0, ..., K}")
        if self.b_values and len(self.b_values) != self.W_n:
            raise ValueError("b_values length must equal W_n")
        return self


class BlockOutcome(BaseModel):
    """A completed block with the decision taken at its end."""
    record: WindowRecord
    decision: AdaptDecision
    next_M: int = Field(ge=1)


class StepRecord(BaseModel):
    """Per-step filter output."""
    t: int
    M: int
    posterior_mean: List[float]
    pred_obs_mean: float
    a: int
    b: Optional[float] = None


class RunTrace(BaseModel):
    """Full output of one adaptive filter run."""
    steps: List[StepRecord] = Field(default_factory=list)
    blocks: List[BlockOutcome] = Field(default_factory=list)
    seed: Optional[int] = None

    @property
    def a_values(self) -> List[int]:
        return [step.a for step in self.steps]

    @property
    def b_values(self) -> List[Optional[float]]:
        return [step.b for step in self.steps]

    @property
    def particle_counts(self) -> List[int]:
        return [step.M for step in self.steps]
