"""PPO hyperparameters."""

from pydantic import BaseModel, Field


class PpoConfig(BaseModel):
    """Clipped-surrogate PPO settings; defaults follow the Atari table except for batch sizing."""

    gamma: float = Field(default=0.99, gt=0.0, le=1.0, description="Discount factor")
    gae_lambda: float = Field(default=0.95, ge=0.0, le=1.0, description="GAE lambda")
    clip_epsilon: float = Field(default=0.1, gt=0.0, description="Ratio clip range")
    entropy_coef: float = Field(default=0.01, ge=0.0, description="Entropy bonus coefficient")
    value_coef: float = Field(default=0.25, ge=0.0, description="Value loss coefficient")
    max_grad_norm: float = Field(default=0.5, gt=0.0, description="Global gradient norm clip")
    minibatch_size: int = Field(default=64, ge=1, description="Samples per minibatch")
    epochs_per_update: int = Field(default=4, ge=1, description="Optimization epochs per rollout")
    normalize_advantages: bool = Field(default=True, description="Per-minibatch advantage normalization")
    learning_rate: float = Field(default=2.5e-4, ge=0.0, description="Adam learning rate")
    lr_linear_decay: bool = Field(default=True, description="Decay the learning rate linearly to zero")
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="Adam first-moment decay")
    adam_beta2: float = Field(default=0.999, ge=0.0, lt=1.0, description="Adam second-moment decay")
    adam_epsilon: float = Field(default=1e-8, gt=0.0, description="Adam denominator epsilon")


def linear_decay(learning_rate: float, update_index: int, num_updates: int) -> float:
    """Learning rate for ``update_index`` when annealing linearly to zero over ``num_updates``."""
    if num_updates <= 0:
        return learning_rate
    return learning_rate * (1.0 - update_index / num_updates)
