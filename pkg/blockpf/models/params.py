"""
Parameter, policy and experiment schemas for blockpf.

Pydantic models for the bundled state-space models, the block-adaptive
policy and the harness experiment recipes.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ModelName(str, Enum):
    """Bundled benchmark models."""
    LGSS = "lgss"
    GROWTH1 = "growth1"
    GROWTH2 = "growth2"
    LORENZ63 = "lorenz63"


class AdaptMethod(str, Enum):
    """Block assessment methods."""
    UNIFORMITY_A = "uniformity-A"
    CORRELATION_A = "correlation-A"
    UNIFORMITY_B = "uniformity-B"
    MOMENTS_B = "moments-B"
    FIXED = "fixed"
    SCHEDULED = "scheduled"


class ExperimentMode(str, Enum):
    """Harness experiment modes."""
    SWEEP = "sweep"
    ADAPTIVE = "adaptive"
    TWO_PHASE = "two_phase"


class LgssParams(BaseModel):
    """Scalar linear-Gaussian model x_t = a x_{t-1} + u_t, y_t = x_t + v_t."""
    model_config = ConfigDict(frozen=True)

    a: float = 0.9
    sigma_u: float = Field(default=math.sqrt(0.5), gt=0.0)
    sigma_v: float = Field(default=1.0, gt=0.0)
    prior_mean: float = 0.0
    prior_std: float = Field(default=1.0, gt=0.0)


class GrowthParams(BaseModel):
    """Stochastic growth model; the prior is N(0, 1)."""
    model_config = ConfigDict(frozen=True)

    phi: float = 0.4
    sigma_u: float = Field(default=1.0, gt=0.0)
    sigma_v: float = Field(default=0.5, gt=0.0)


class Lorenz63Params(BaseModel):
    """Stochastic Lorenz 63 observed through its first coordinate."""
    model_config = ConfigDict(frozen=True)

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    delta: float = Field(default=1e-3, gt=0.0)
    t_obs: float = Field(default=0.2, gt=0.0)
    sigma2_obs: float = Field(default=0.5, gt=0.0)
    sigma2_state: float = Field(default=1.0, ge=0.0)
    prior_mean: Tuple[float, float, float] = (-5.91652, -5.52332, 24.5723)
    prior_std: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def validate_observation_period(self) -> "Lorenz63Params":
        ratio = self.t_obs / self.delta
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ValueError("t_obs must be a positive integer multiple of delta")
        return self

    @property
    def n_substeps(self) -> int:
        """Integration steps between consecutive observations."""
        return int(round(self.t_obs / self.delta))


ModelParams = Union[LgssParams, GrowthParams, Lorenz63Params]

_MODEL_DEFAULTS: Dict[ModelName, Tuple[type, Dict[str, Any]]] = {
    ModelName.LGSS: (LgssParams, {}),
    ModelName.GROWTH1: (GrowthParams, {"sigma_u": 1.0, "sigma_v": 0.5}),
    ModelName.GROWTH2: (GrowthParams, {"sigma_u": 2.0, "sigma_v": 0.1}),
    ModelName.LORENZ63: (Lorenz63Params, {}),
}


def build_params(name: ModelName, overrides: Optional[Dict[str, Any]] = None) -> ModelParams:
    """Build the parameter set of a bundled model, applying overrides."""
    params_cls, defaults = _MODEL_DEFAULTS[ModelName(name)]
    values = {**defaults, **(overrides or {})}
    unknown = set(values) - set(params_cls.model_fields)
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {', '.join(sorted(unknown))}")
    return params_cls(**values)


class AdaptPolicy(BaseModel):
    """Block-adaptive policy: statistics, thresholds and particle-count bounds."""
    model_config = ConfigDict(frozen=True)

    K: int = Field(default=7, ge=1)
    W: int = Field(default=50, ge=1)
    w_schedule: Optional[List[int]] = None
    p_low: float = Field(default=0.2, gt=0.0, lt=1.0)
    p_high: float = Field(default=0.6, gt=0.0, lt=1.0)
    r_low: float = Field(default=0.05, ge=0.0, le=1.0)
    r_high: float = Field(default=0.2, ge=0.0, le=1.0)
    M_min: int = Field(default=16, ge=1)
    M_max: int = Field(default=2 ** 16, ge=1)
    scale: float = Field(default=2.0, gt=1.0)
    method: AdaptMethod = AdaptMethod.UNIFORMITY_A
    m_schedule: Optional[List[int]] = None
    n_moments: int = Field(default=5, ge=1)

    @model_validator(mode="after")
    def validate_policy(self) -> "AdaptPolicy":
        if self.M_min > self.M_max:
            raise ValueError("M_min must not exceed M_max")
        if self.p_low >= self.p_high:
            raise ValueError("p_low must be smaller than p_high")
        if self.r_low >= self.r_high:
            raise ValueError("r_low must be smaller than r_high")
        if self.w_schedule is not None and (not self.w_schedule or min(self.w_schedule) < 1):
            raise ValueError("w_schedule entries must be positive")
        if self.method == AdaptMethod.SCHEDULED:
            if not self.m_schedule or min(self.m_schedule) < 1:
                raise ValueError("scheduled method requires a positive m_schedule")
        return self

    def window_length(self, n: int) -> int:
        """Length W_n of block n."""
        if self.w_schedule:
            return self.w_schedule[min(n, len(self.w_schedule) - 1)]
        return self.W

    def clamp(self, m: int) -> int:
        return max(self.M_min, min(self.M_max, m))

    @property
    def uses_b(self) -> bool:
        return self.method in (AdaptMethod.UNIFORMITY_B, AdaptMethod.MOMENTS_B)


SWEEP_METRICS = (
    "pvalue", "pvalue_b", "corr", "ab_gap", "mse_state", "rmse_kalman", "mean_M",
    "pmf_a", "pmf_b",
)
ADAPTIVE_METRICS = SWEEP_METRICS + ("mean_M_last", "M_series")
TWO_PHASE_METRICS = ("mse_m1", "mse_m2", "mse_switch")

DEFAULT_METRICS = {
    ExperimentMode.SWEEP: ["pvalue", "corr", "ab_gap", "mse_state"],
    ExperimentMode.ADAPTIVE: ["mean_M_last", "mean_M", "pvalue"],
    ExperimentMode.TWO_PHASE: list(TWO_PHASE_METRICS),
}

_ALLOWED_METRICS = {
    ExperimentMode.SWEEP: SWEEP_METRICS,
    ExperimentMode.ADAPTIVE: ADAPTIVE_METRICS,
    ExperimentMode.TWO_PHASE: TWO_PHASE_METRICS,
}


def _split(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class ExperimentConfig(BaseModel):
    """A harness experiment recipe (one CSV table)."""
    model_config = ConfigDict(frozen=True)

    name: str = "experiment"
    description: str = ""
    model: ModelName
    model_overrides: Dict[str, float] = Field(default_factory=dict)
    mode: ExperimentMode
    T: int = Field(ge=1)
    runs: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    M_list: List[int] = Field(default_factory=list)
    M0_list: List[int] = Field(default_factory=list)
    M_pairs: List[Tuple[int, int]] = Field(default_factory=list)
    K_list: List[int] = Field(default_factory=lambda: [7])
    W_list: List[int] = Field(default_factory=lambda: [20])
    method: AdaptMethod = AdaptMethod.UNIFORMITY_A
    p_low: float = 0.2
    p_high: float = 0.6
    r_low: float = 0.05
    r_high: float = 0.2
    M_min: int = Field(default=16, ge=1)
    M_max: int = Field(default=2 ** 16, ge=1)
    scale: float = 2.0
    last_windows: int = Field(default=50, ge=1)
    b_bins: int = Field(default=20, ge=2)
    metrics: List[str] = Field(default_factory=list)
    reference_M: int = Field(default=2 ** 17, ge=1)
    output_path: Optional[str] = None

    @field_validator("M_list", "M0_list", "K_list", "W_list", "metrics", mode="before")
    @classmethod
    def split_lists(cls, v: Any) -> Any:
        return _split(v)

    @field_validator("M_list", "M0_list", "K_list", "W_list")
    @classmethod
    def validate_counts(cls, v: List[int]) -> List[int]:
        if any(item < 1 for item in v):
            raise ValueError("all counts must be positive")
        return v

    @field_validator("M_pairs", mode="before")
    @classmethod
    def split_pairs(cls, v: Any) -> Any:
        if isinstance(v, str):
            pairs = []
            for item in _split(v):
                first, _, second = item.partition(":")
                pairs.append((int(first), int(second)))
            return pairs
        return v

    @model_validator(mode="after")
    def validate_grid(self) -> "ExperimentConfig":
        if not self.K_list:
            raise ValueError("K_list must not be empty")
        if self.mode == ExperimentMode.SWEEP and not self.M_list:
            raise ValueError("sweep mode requires M_list")
        if self.mode == ExperimentMode.ADAPTIVE:
            if not self.M0_list or not self.W_list:
                raise ValueError("adaptive mode requires M0_list and W_list")
            self.policy(self.K_list[0], self.W_list[0])
        if self.mode == ExperimentMode.SWEEP and not self.W_list:
            raise ValueError("sweep mode requires W_list")
        if self.mode == ExperimentMode.TWO_PHASE:
            if not self.M_pairs:
                raise ValueError("two_phase mode requires M_pairs")
            if any(m1 < 1 or m2 < 1 for m1, m2 in self.M_pairs):
                raise ValueError("two_phase particle counts must be positive")
            if self.T < 2:
                raise ValueError("two_phase mode requires T >= 2")
        unknown = set(self.metrics) - set(_ALLOWED_METRICS[self.mode])
        if unknown:
            raise ValueError(f"metrics not available in {self.mode.value} mode: {', '.join(sorted(unknown))}")
        if "rmse_kalman" in self.metrics and self.model != ModelName.LGSS:
            raise ValueError("rmse_kalman requires the lgss model")
        self.model_params()
        return self

    def model_params(self) -> ModelParams:
        return build_params(self.model, self.model_overrides)

    @property
    def resolved_metrics(self) -> List[str]:
        return list(self.metrics) if self.metrics else list(DEFAULT_METRICS[self.mode])

    def policy(self, K: int, W: int) -> AdaptPolicy:
        """Adaptive policy for one grid cell."""
        return AdaptPolicy(
            K=K, W=W, p_low=self.p_low, p_high=self.p_high,
            r_low=self.r_low, r_high=self.r_high,
            M_min=self.M_min, M_max=self.M_max, scale=self.scale,
            method=self.method,
        )
