"""Fixed-horizon on-policy storage and generalized advantage estimation."""

import dataclasses
from dataclasses import dataclass, field
from typing import Hashable, List, Optional, Sequence

import numpy as np

from opr_trainer.errors import DomainError, ShapeError
from opr_trainer.ppo.hyperparams import PpoConfig


@dataclass(slots=True)
class RolloutBatch:
    """Parallel per-step arrays of one rollout; advantages and targets are filled by ``compute_gae``.

    ``dones`` marks the last step of an episode, ``truncated`` the subset ended by the horizon;
    ``truncation_values`` holds V of the final observation on truncated steps and is 0 elsewhere.
    """

    states: np.ndarray
    actions: np.ndarray
    raw_rewards: np.ndarray
    shaped_rewards: np.ndarray
    old_log_probs: np.ndarray
    values: np.ndarray
    dones: np.ndarray
    truncated: np.ndarray
    truncation_values: np.ndarray
    bootstrap_value: float = 0.0
    state_keys: List[Hashable] = field(default_factory=list)
    advantages: Optional[np.ndarray] = None
    return_targets: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        n = len(self.actions)
        named = {
            "states": self.states,
            "raw_rewards": self.raw_rewards,
            "shaped_rewards": self.shaped_rewards,
            "old_log_probs": self.old_log_probs,
            "values": self.values,
            "dones": self.dones,
            "truncated": self.truncated,
            "truncation_values": self.truncation_values,
        }
        for name, arr in named.items():
            if len(arr) != n:
                raise ShapeError(f"{name} has length {len(arr)}, expected {n}")
        if self.state_keys and len(self.state_keys) != n:
            raise ShapeError(f"state_keys has length {len(self.state_keys)}, expected {n}")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def has_advantages(self) -> bool:
        return self.advantages is not None and self.return_targets is not None

    def require_advantages(self) -> tuple[np.ndarray, np.ndarray]:
        if self.advantages is None or self.return_targets is None:
            raise DomainError("advantages are only available after compute_gae")
        return self.advantages, self.return_targets


def compute_gae(batch: RolloutBatch, config: PpoConfig, use_shaped: bool = True) -> RolloutBatch:
    """Backward GAE recursion; returns a copy with advantages and return targets."""
    n = len(batch)
    if n == 0:
        raise DomainError("cannot compute advantages of an empty rollout")
    rewards = batch.shaped_rewards if use_shaped else batch.raw_rewards
    gamma, lam = config.gamma, config.gae_lambda

    advantages = np.zeros(n)
    last = 0.0
    for t in reversed(range(n)):
        if batch.dones[t]:
            next_value = float(batch.truncation_values[t]) if batch.truncated[t] else 0.0
            chain = 0.0
        else:
            next_value = float(batch.values[t + 1]) if t + 1 < n else batch.bootstrap_value
            chain = 1.0
        delta = float(rewards[t]) + gamma * next_value - float(batch.values[t])
        last = delta + gamma * lam * chain * last
        advantages[t] = last
    return dataclasses.replace(batch, advantages=advantages, return_targets=advantages + batch.values)


def concatenate(batches: Sequence[RolloutBatch]) -> RolloutBatch:
    """Merge batches in the given order; advantages are merged when every batch has them."""
    if not batches:
        raise DomainError("nothing to concatenate")
    with_adv = all(b.has_advantages for b in batches)
    return RolloutBatch(
        states=np.concatenate([b.states for b in batches]),
        actions=np.concatenate([b.actions for b in batches]),
        raw_rewards=np.concatenate([b.raw_rewards for b in batches]),
        shaped_rewards=np.concatenate([b.shaped_rewards for b in batches]),
        old_log_probs=np.concatenate([b.old_log_probs for b in batches]),
        values=np.concatenate([b.values for b in batches]),
        dones=np.concatenate([b.dones for b in batches]),
        truncated=np.concatenate([b.truncated for b in batches]),
        truncation_values=np.concatenate([b.truncation_values for b in batches]),
        state_keys=[k for b in batches for k in b.state_keys],
        advantages=np.concatenate([b.require_advantages()[0] for b in batches]) if with_adv else None,
        return_targets=np.concatenate([b.require_advantages()[1] for b in batches]) if with_adv else None,
    )
