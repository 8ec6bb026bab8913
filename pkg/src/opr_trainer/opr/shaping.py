"""Directional log-ratio reward shaping."""

import dataclasses
from dataclasses import dataclass
from typing import Union, overload

import numpy as np

from opr_trainer.opr.buffer import Episode, GoodEpisodeBuffer
from opr_trainer.opr.hyperparams import OprConfig, ShapingMode
from opr_trainer.ppo.rollout import RolloutBatch

FloatOrArray = Union[float, np.ndarray]


def directional_delta(good_log_prob: FloatOrArray, current_log_prob: FloatOrArray) -> FloatOrArray:
    """log pi_good(a|s) - log pi_theta(a|s); positive when the good policy favored the action more."""
    return good_log_prob - current_log_prob


@overload
def bound_delta(delta: float, bound: float) -> float: ...


@overload
def bound_delta(delta: np.ndarray, bound: float) -> np.ndarray: ...


def bound_delta(delta: FloatOrArray, bound: float) -> FloatOrArray:
    """clip(2 tanh(delta / 2), -bound, bound)."""
    bounded = np.clip(2.0 * np.tanh(np.asarray(delta, dtype=np.float64) / 2.0), -bound, bound)
    if np.ndim(bounded) == 0:
        return float(bounded)
    return bounded


def shape_reward(raw_reward: FloatOrArray, bounded_delta: FloatOrArray, alpha: float) -> FloatOrArray:
    """Multiplicative adjustment r * (1 + alpha * bounded_delta)."""
    return raw_reward * (1.0 + alpha * bounded_delta)


@dataclass(slots=True)
class ShapingResult:
    batch: RolloutBatch
    mean_abs_delta: float
    match_fraction: float


def shape_rollout(batch: RolloutBatch, buffer: GoodEpisodeBuffer, config: OprConfig) -> ShapingResult:
    """Fill ``shaped_rewards`` from buffer matches; unmatched transitions keep their raw reward.

    The acting policy's recorded log-prob stands in for log pi_theta, so shaped rewards stay fixed
    for the whole update. The bounded deltas are measured even when shaping is inactive.
    """
    n = len(batch)
    bounded = np.zeros(n)
    matched = np.zeros(n, dtype=bool)
    for i in range(n):
        good = buffer.lookup_good_log_prob(batch.state_keys[i], int(batch.actions[i]))
        if good is None:
            continue
        matched[i] = True
        bounded[i] = bound_delta(float(directional_delta(good, float(batch.old_log_probs[i]))), config.delta)

    shaped = batch.raw_rewards.copy()
    if config.shaping_active and config.shaping_mode == ShapingMode.ROLLOUT:
        shaped[matched] = shape_reward(batch.raw_rewards[matched], bounded[matched], config.alpha)

    n_matched = int(matched.sum())
    return ShapingResult(
        batch=dataclasses.replace(batch, shaped_rewards=shaped),
        mean_abs_delta=float(np.mean(np.abs(bounded[matched]))) if n_matched else 0.0,
        match_fraction=n_matched / n if n else 0.0,
    )


def shape_episode_rewards(
    episode: Episode, buffer: GoodEpisodeBuffer, current_log_probs: np.ndarray, config: OprConfig
) -> np.ndarray:
    """Shaped rewards for a buffer-replayed episode, scored against the current policy."""
    raw = np.array([t.reward for t in episode.transitions], dtype=np.float64)
    if not config.shaping_active:
        return raw
    shaped = raw.copy()
    for i, t in enumerate(episode.transitions):
        good = buffer.lookup_good_log_prob(t.state_key, t.action)
        if good is None:
            continue
        d = bound_delta(float(directional_delta(good, float(current_log_probs[i]))), config.delta)
        shaped[i] = float(shape_reward(t.reward, d, config.alpha))
    return shaped
