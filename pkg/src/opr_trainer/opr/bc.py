"""Auxiliary behavioral cloning over the good-episode buffer."""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from opr_trainer.agent import AgentGrads, AgentParams, evaluate, evaluate_backward
from opr_trainer.opr.buffer import GoodEpisodeBuffer

Sample = Tuple[np.ndarray, np.ndarray]


@dataclass(slots=True)
class BcLoss:
    loss: float
    grads: AgentGrads


def bc_loss(params: AgentParams, states: np.ndarray, actions: np.ndarray) -> Optional[BcLoss]:
    """Negative mean log-likelihood of stored actions under the current policy; None for an empty sample."""
    actions = np.asarray(actions, dtype=np.int64)
    if actions.size == 0:
        return None
    evaluation = evaluate(params, states, actions)
    n = actions.shape[0]
    grads = evaluate_backward(params, evaluation, d_log_probs=np.full(n, -1.0 / n))
    return BcLoss(loss=float(-np.mean(evaluation.log_probs)), grads=grads)


def total_loss(actor_loss: float, bc_loss: float, lambda_bc: float) -> float:
    """Actor loss plus the weighted BC loss."""
    return actor_loss + lambda_bc * bc_loss


class BehaviorSampler:
    """Draws BC samples from a buffer with its own generator so the PPO shuffle stream is untouched."""

    def __init__(self, buffer: GoodEpisodeBuffer, rng: np.random.Generator) -> None:
        self.buffer = buffer
        self.rng = rng

    def sample(self, size: int) -> Optional[Sample]:
        return self.buffer.sample_transitions(self.rng, size)

    def epoch(self, size: int) -> List[Sample]:
        return self.buffer.epoch_batches(self.rng, size)
