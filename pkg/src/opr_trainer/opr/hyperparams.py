"""Optimistic Policy Regularization settings."""

from enum import Enum

from pydantic import BaseModel, Field, model_validator


class ShapingMode(str, Enum):
    """Which transitions receive the directional log-ratio shaping."""

    ROLLOUT = "rollout"
    BUFFER_ONLY = "buffer_only"


class IntervalUnit(str, Enum):
    """What ``update_interval`` counts between BC applications."""

    UPDATES = "updates"
    EPISODES = "episodes"


class OprConfig(BaseModel):
    """Good-episode buffer, reward shaping and behavioral cloning settings."""

    opr_enabled: bool = Field(default=True, description="Master switch for shaping and BC")
    shaping_enabled: bool = Field(default=True, description="Apply directional log-ratio reward shaping")
    bc_enabled: bool = Field(default=True, description="Apply the auxiliary behavioral cloning loss")
    alpha: float = Field(default=0.5, ge=0.0, description="Shaping scale")
    delta: float = Field(default=0.01, gt=0.0, description="Shaping bound on the tanh-squashed log-ratio")
    lambda_bc: float = Field(default=1.0, ge=0.0, description="Weight of the BC loss")
    bc_epochs: int = Field(default=3, ge=0, description="Dedicated BC passes over the buffer when BC is due")
    update_interval: int = Field(default=50, ge=1, description="Interval between BC applications")
    update_interval_unit: IntervalUnit = Field(default=IntervalUnit.UPDATES, description="Unit of update_interval")
    buffer_capacity: int = Field(default=100, ge=1, description="Maximum transitions in the good-episode buffer")
    percentile: float = Field(default=75.0, ge=0.0, le=100.0, description="Admission percentile of recent returns")
    return_window: int = Field(default=100, ge=1, description="Recent episodic returns used for the threshold")
    shaping_mode: ShapingMode = Field(default=ShapingMode.ROLLOUT, description="Which transitions get shaped")
    buffer_in_surrogate: bool = Field(
        default=False, description="Also feed buffer transitions to the clipped surrogate with their recorded log-probs"
    )

    @model_validator(mode="after")
    def _check_shaping_mode(self) -> "OprConfig":
        if self.shaping_mode == ShapingMode.BUFFER_ONLY and not self.buffer_in_surrogate:
            raise ValueError("shaping_mode buffer_only only affects learning with buffer_in_surrogate enabled")
        return self

    @property
    def shaping_active(self) -> bool:
        return self.opr_enabled and self.shaping_enabled

    @property
    def bc_active(self) -> bool:
        return self.opr_enabled and self.bc_enabled and self.lambda_bc > 0.0
