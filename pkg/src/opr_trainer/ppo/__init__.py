"""On-policy PPO machinery."""

# rollout must be imported before update: opr.shaping reads RolloutBatch while update imports opr.bc
from opr_trainer.ppo.rollout import RolloutBatch, compute_gae, concatenate  # isort: skip
from opr_trainer.ppo.hyperparams import PpoConfig, linear_decay
from opr_trainer.ppo.losses import SurrogateLoss, actor_loss, clipped_surrogate_loss, value_loss, value_loss_grad
from opr_trainer.ppo.update import (
    LossBreakdown,
    Minibatch,
    OprAugmentation,
    UpdateStats,
    loss_and_grads,
    normalize_advantages,
    ppo_update,
)

__all__ = [
    "LossBreakdown",
    "Minibatch",
    "OprAugmentation",
    "PpoConfig",
    "RolloutBatch",
    "SurrogateLoss",
    "UpdateStats",
    "actor_loss",
    "clipped_surrogate_loss",
    "compute_gae",
    "concatenate",
    "linear_decay",
    "loss_and_grads",
    "normalize_advantages",
    "ppo_update",
    "value_loss",
    "value_loss_grad",
]
