"""Minibatch PPO optimization with optional OPR augmentation."""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from opr_trainer.agent import (
    AgentGrads,
    AgentOptimizer,
    AgentParams,
    apply_gradients,
    evaluate,
    evaluate_backward,
)
from opr_trainer.errors import DomainError, NumericalError
from opr_trainer.numkit import clip_by_global_norm
from opr_trainer.opr.bc import BehaviorSampler, bc_loss, total_loss
from opr_trainer.ppo.hyperparams import PpoConfig
from opr_trainer.ppo.losses import actor_loss, clipped_surrogate_loss, value_loss, value_loss_grad
from opr_trainer.ppo.rollout import RolloutBatch

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class Minibatch:
    states: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    return_targets: np.ndarray


@dataclass(slots=True)
class LossBreakdown:
    surrogate: float
    value: float
    entropy_mean: float
    entropy_term: float
    actor: float
    bc: float
    total: float
    clip_fraction: float


@dataclass(slots=True)
class OprAugmentation:
    """Buffer-derived extras for one update.

    ``sampler`` is None when BC is not due; ``replay`` holds re-scored buffer rows for the surrogate.
    """

    lambda_bc: float = 0.0
    bc_epochs: int = 0
    sampler: Optional[BehaviorSampler] = None
    replay: Optional[RolloutBatch] = None
    replay_rng: Optional[np.random.Generator] = None


@dataclass(slots=True)
class UpdateStats:
    surrogate_loss: float = 0.0
    value_loss: float = 0.0
    entropy_term: float = 0.0
    bc_loss: float = 0.0
    total_loss: float = 0.0
    mean_entropy: float = 0.0
    clip_fraction: float = 0.0
    grad_norm: float = 0.0
    minibatch_steps: int = 0
    bc_steps: int = 0


def _check_finite(breakdown: LossBreakdown) -> None:
    for name in ("surrogate", "value", "entropy_mean", "bc", "total"):
        value = getattr(breakdown, name)
        if not math.isfinite(value):
            raise NumericalError(f"non-finite {name} loss ({value})", component=name)


def _scale(grads: AgentGrads, factor: float) -> AgentGrads:
    return AgentGrads.from_groups([g.with_arrays([a * factor for a in g.arrays()]) for g in grads.groups()])


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    """Zero mean, unit standard deviation with a 1e-8 floor on the deviation."""
    result: np.ndarray = (advantages - advantages.mean()) / max(float(advantages.std()), 1e-8)
    return result


def loss_and_grads(
    params: AgentParams,
    minibatch: Minibatch,
    config: PpoConfig,
    bc_sample: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    lambda_bc: float = 0.0,
    replay: Optional[Minibatch] = None,
) -> Tuple[LossBreakdown, AgentGrads]:
    """Total loss = actor + value_coef * value + lambda_bc * BC, with its exact gradient.

    Replay rows only enter the clipped surrogate; the BC sample only enters the BC term.
    """
    n = minibatch.actions.shape[0]
    evaluation = evaluate(params, minibatch.states, minibatch.actions)

    log_probs = evaluation.log_probs
    old_log_probs = minibatch.old_log_probs
    advantages = minibatch.advantages
    replay_eval = None
    if replay is not None and replay.actions.size:
        replay_eval = evaluate(params, replay.states, replay.actions)
        log_probs = np.concatenate([log_probs, replay_eval.log_probs])
        old_log_probs = np.concatenate([old_log_probs, replay.old_log_probs])
        advantages = np.concatenate([advantages, replay.advantages])

    surrogate = clipped_surrogate_loss(log_probs, old_log_probs, advantages, config.clip_epsilon)
    entropy_mean = float(np.mean(evaluation.entropies))
    v_loss = value_loss(evaluation.values, minibatch.return_targets)
    actor = actor_loss(surrogate.loss, entropy_mean, config)

    grads = evaluate_backward(
        params,
        evaluation,
        d_log_probs=surrogate.grad[:n],
        d_entropies=np.full(n, -config.entropy_coef / n),
        d_values=config.value_coef * value_loss_grad(evaluation.values, minibatch.return_targets),
    )
    if replay_eval is not None:
        grads = grads.add(evaluate_backward(params, replay_eval, d_log_probs=surrogate.grad[n:]))

    bc_value = 0.0
    if bc_sample is not None and lambda_bc > 0.0:
        bc = bc_loss(params, bc_sample[0], bc_sample[1])
        if bc is not None:
            bc_value = bc.loss
            grads = grads.add(_scale(bc.grads, lambda_bc))

    objective = total_loss(actor, bc_value, lambda_bc) + config.value_coef * v_loss
    breakdown = LossBreakdown(
        surrogate=surrogate.loss,
        value=v_loss,
        entropy_mean=entropy_mean,
        entropy_term=-config.entropy_coef * entropy_mean,
        actor=actor,
        bc=bc_value,
        total=objective,
        clip_fraction=surrogate.clip_fraction,
    )
    _check_finite(breakdown)
    return breakdown, grads


def _replay_minibatch(replay: RolloutBatch, rng: np.random.Generator, size: int) -> Minibatch:
    adv, targets = replay.require_advantages()
    idx = rng.choice(len(replay), size=min(size, len(replay)), replace=False)
    return Minibatch(replay.states[idx], replay.actions[idx], replay.old_log_probs[idx], adv[idx], targets[idx])


def ppo_update(
    params: AgentParams,
    optimizer: AgentOptimizer,
    batch: RolloutBatch,
    config: PpoConfig,
    rng: np.random.Generator,
    learning_rate: float,
    aux: Optional[OprAugmentation] = None,
) -> Tuple[AgentParams, AgentOptimizer, UpdateStats]:
    """Run ``epochs_per_update`` shuffled minibatch epochs, then any due BC-only passes.

    Only ``rng`` drives the minibatch shuffle; all buffer sampling uses the augmentation's own
    generators, so a run without augmentation consumes exactly the plain PPO random stream.
    """
    if not batch.has_advantages:
        raise DomainError("ppo_update needs a batch with computed advantages")
    advantages, return_targets = batch.require_advantages()
    n = len(batch)
    aux = aux or OprAugmentation()
    bc_due = aux.sampler is not None and aux.lambda_bc > 0.0

    sums: dict[str, float] = {k: 0.0 for k in ("surrogate", "value", "entropy_term", "bc", "total", "entropy", "clip")}
    norms: List[float] = []
    steps = 0
    for _ in range(config.epochs_per_update):
        perm = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = perm[start : start + config.minibatch_size]
            mb = Minibatch(
                batch.states[idx], batch.actions[idx], batch.old_log_probs[idx], advantages[idx], return_targets[idx]
            )
            replay_mb = None
            if aux.replay is not None and aux.replay_rng is not None and len(aux.replay):
                replay_mb = _replay_minibatch(aux.replay, aux.replay_rng, len(idx))
            if config.normalize_advantages:
                if replay_mb is not None:
                    joint = normalize_advantages(np.concatenate([mb.advantages, replay_mb.advantages]))
                    mb.advantages = joint[: len(idx)]
                    replay_mb.advantages = joint[len(idx) :]
                else:
                    mb.advantages = normalize_advantages(mb.advantages)
            bc_sample = aux.sampler.sample(len(idx)) if bc_due and aux.sampler is not None else None

            breakdown, grads = loss_and_grads(params, mb, config, bc_sample, aux.lambda_bc, replay_mb)
            clipped, norm = clip_by_global_norm(grads.groups(), config.max_grad_norm)
            params, optimizer = apply_gradients(params, AgentGrads.from_groups(clipped), optimizer, learning_rate)

            sums["surrogate"] += breakdown.surrogate
            sums["value"] += breakdown.value
            sums["entropy_term"] += breakdown.entropy_term
            sums["bc"] += breakdown.bc
            sums["total"] += breakdown.total
            sums["entropy"] += breakdown.entropy_mean
            sums["clip"] += breakdown.clip_fraction
            norms.append(norm)
            steps += 1

    bc_steps = 0
    if bc_due and aux.sampler is not None:
        for _ in range(aux.bc_epochs):
            for states, actions in aux.sampler.epoch(config.minibatch_size):
                bc = bc_loss(params, states, actions)
                if bc is None:
                    continue
                if not math.isfinite(bc.loss):
                    raise NumericalError(f"non-finite bc loss ({bc.loss})", component="bc")
                clipped, _ = clip_by_global_norm(_scale(bc.grads, aux.lambda_bc).groups(), config.max_grad_norm)
                params, optimizer = apply_gradients(params, AgentGrads.from_groups(clipped), optimizer, learning_rate)
                bc_steps += 1

    stats = UpdateStats(
        surrogate_loss=sums["surrogate"] / steps,
        value_loss=sums["value"] / steps,
        entropy_term=sums["entropy_term"] / steps,
        bc_loss=sums["bc"] / steps,
        total_loss=sums["total"] / steps,
        mean_entropy=sums["entropy"] / steps,
        clip_fraction=sums["clip"] / steps,
        grad_norm=float(np.mean(norms)),
        minibatch_steps=steps,
        bc_steps=bc_steps,
    )
    logger.debug(
        f"PPO update: {steps} minibatch steps, {bc_steps} BC steps, "
        f"loss {stats.total_loss:.4f}, clip {stats.clip_fraction:.3f}"
    )
    return params, optimizer, stats
