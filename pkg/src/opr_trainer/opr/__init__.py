"""Optimistic Policy Regularization: good-episode buffer, reward shaping and behavioral cloning."""

from opr_trainer.opr.bc import BcLoss, BehaviorSampler, bc_loss, total_loss
from opr_trainer.opr.buffer import (
    AdmissionDecision,
    AdmissionReason,
    BufferStats,
    Episode,
    GoodEpisodeBuffer,
    ReturnWindow,
    Transition,
)
from opr_trainer.opr.hyperparams import IntervalUnit, OprConfig, ShapingMode
from opr_trainer.opr.shaping import (
    ShapingResult,
    bound_delta,
    directional_delta,
    shape_episode_rewards,
    shape_reward,
    shape_rollout,
)

__all__ = [
    "AdmissionDecision",
    "AdmissionReason",
    "BcLoss",
    "BehaviorSampler",
    "BufferStats",
    "Episode",
    "GoodEpisodeBuffer",
    "IntervalUnit",
    "OprConfig",
    "ReturnWindow",
    "ShapingMode",
    "ShapingResult",
    "Transition",
    "bc_loss",
    "bound_delta",
    "directional_delta",
    "shape_episode_rewards",
    "shape_reward",
    "shape_rollout",
    "total_loss",
]
