"""Loss terms of the PPO objective."""

from dataclasses import dataclass

import numpy as np

from opr_trainer.errors import NumericalError, ShapeError
from opr_trainer.ppo.hyperparams import PpoConfig


@dataclass(slots=True)
class SurrogateLoss:
    loss: float
    grad: np.ndarray
    clip_fraction: float


def clipped_surrogate_loss(
    log_probs: np.ndarray, old_log_probs: np.ndarray, advantages: np.ndarray, clip_epsilon: float
) -> SurrogateLoss:
    """Negated mean of min(r A, clip(r, 1-eps, 1+eps) A) and its gradient per log-prob.

    The gradient of a sample is zero whenever the clipped branch is the active minimum.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    old_log_probs = np.asarray(old_log_probs, dtype=np.float64)
    advantages = np.asarray(advantages, dtype=np.float64)
    if not (log_probs.shape == old_log_probs.shape == advantages.shape) or log_probs.ndim != 1:
        raise ShapeError("log_probs, old_log_probs and advantages must be equal-length vectors")
    if not (np.all(np.isfinite(log_probs)) and np.all(np.isfinite(old_log_probs)) and np.all(np.isfinite(advantages))):
        raise NumericalError("non-finite surrogate input", component="surrogate")

    n = log_probs.shape[0]
    ratio = np.exp(log_probs - old_log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * advantages
    objective = np.minimum(unclipped, clipped)
    active = unclipped <= clipped
    # d(r A)/d log_prob = r A
    grad = np.where(active, -unclipped / n, 0.0)
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > clip_epsilon)) if n else 0.0
    return SurrogateLoss(loss=float(-np.mean(objective)), grad=grad, clip_fraction=clip_fraction)


def value_loss(values: np.ndarray, return_targets: np.ndarray) -> float:
    """0.5 * mean squared error."""
    values = np.asarray(values, dtype=np.float64)
    return_targets = np.asarray(return_targets, dtype=np.float64)
    if values.shape != return_targets.shape:
        raise ShapeError("values and return_targets must have equal length")
    return float(0.5 * np.mean((values - return_targets) ** 2))


def value_loss_grad(values: np.ndarray, return_targets: np.ndarray) -> np.ndarray:
    grad: np.ndarray = (np.asarray(values) - np.asarray(return_targets)) / len(values)
    return grad


def actor_loss(surrogate: float, entropy_mean: float, config: PpoConfig) -> float:
    """Surrogate loss minus the entropy bonus."""
    return surrogate - config.entropy_coef * entropy_mean
