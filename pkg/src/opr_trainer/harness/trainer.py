"""The collect, shape, GAE and update loop over lockstep parallel environments."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from opr_trainer.agent import AgentOptimizer, AgentParams, act_batch, evaluate, init_agent
from opr_trainer.envs import Environment, StepResult
from opr_trainer.errors import CheckpointError
from opr_trainer.harness.checkpoint import LoadedCheckpoint
from opr_trainer.harness.experiment import ExperimentConfig
from opr_trainer.harness.metrics import MetricsRecord
from opr_trainer.harness.seeding import Stream, env_reset_seed, stream_rng
from opr_trainer.opr import BehaviorSampler, Episode, GoodEpisodeBuffer, IntervalUnit, Transition, shape_rollout
from opr_trainer.opr.buffer import transition_from_dict, transition_to_dict
from opr_trainer.opr.replay import build_replay_batch
from opr_trainer.ppo import OprAugmentation, RolloutBatch, compute_gae, concatenate, linear_decay, ppo_update

logger = logging.getLogger(__name__)

# sections that must match for a checkpoint to be resumable
_RESUME_KEYS = ("env", "ppo", "opr", "agent", "seed", "steps_per_update", "num_parallel_envs")


@dataclass(slots=True)
class EpisodeLog:
    """Raw returns and lengths of finished episodes with the env step at which each ended."""

    returns: List[float] = field(default_factory=list)
    lengths: List[int] = field(default_factory=list)
    end_steps: List[int] = field(default_factory=list)

    def append(self, episodic_return: float, length: int, end_step: int) -> None:
        self.returns.append(episodic_return)
        self.lengths.append(length)
        self.end_steps.append(end_step)

    def __len__(self) -> int:
        return len(self.returns)


@dataclass(slots=True)
class Rollout:
    batches: List[RolloutBatch]
    policy_entropy: float


class Trainer:
    """Owns parameters, optimizer, buffer and environments of one run."""

    def __init__(self, config: ExperimentConfig, success_threshold: Optional[float] = None) -> None:
        self.config = config
        self.success_threshold = success_threshold
        self.envs: List[Environment[Any]] = [config.env.build() for _ in range(config.num_parallel_envs)]
        self.spec = self.envs[0].spec
        self.params: AgentParams = init_agent(
            self.spec.observation_dim, self.spec.action_count, config.agent, stream_rng(config.seed, Stream.INIT)
        )
        self.optimizer = AgentOptimizer.for_agent(
            self.params, config.ppo.adam_beta1, config.ppo.adam_beta2, config.ppo.adam_epsilon
        )
        opr = config.opr
        self.buffer = GoodEpisodeBuffer(opr.buffer_capacity, opr.percentile, opr.return_window)

        self.update_index = 0
        self.env_steps = 0
        self.next_episode_id = 0
        self.bc_marker = 0
        self.episodes = EpisodeLog()
        self.update_returns: List[float] = []
        self.entropy_collapse_step: Optional[int] = None
        self.episode_counts = [0] * len(self.envs)
        self._partial: List[List[Transition]] = [[] for _ in self.envs]
        for i, env in enumerate(self.envs):
            env.reset(env_reset_seed(config.seed, i, 0))

    @property
    def num_updates(self) -> int:
        return self.config.num_updates

    @property
    def finished(self) -> bool:
        return self.update_index >= self.num_updates

    def learning_rate(self) -> float:
        ppo = self.config.ppo
        if not ppo.lr_linear_decay:
            return ppo.learning_rate
        return linear_decay(ppo.learning_rate, self.update_index, self.num_updates)

    def _values(self, states: np.ndarray) -> np.ndarray:
        batch = np.atleast_2d(states)
        return evaluate(self.params, batch, np.zeros(batch.shape[0], dtype=np.int64)).values

    def _finish_episode(self, env_index: int, result: StepResult) -> None:
        episode = Episode(
            transitions=self._partial[env_index],
            episode_id=self.next_episode_id,
            truncated=result.truncated,
            final_state=result.observation if result.truncated else None,
        )
        self.next_episode_id += 1
        decision = self.buffer.record_episode(episode)
        self.episodes.append(episode.episodic_return, len(episode), self.env_steps)
        if decision.admitted:
            logger.debug(f"Buffer admitted episode {episode.episode_id} (tau {decision.threshold:.4f})")
        self._partial[env_index] = []
        self.episode_counts[env_index] += 1
        seed = env_reset_seed(self.config.seed, env_index, self.episode_counts[env_index])
        self.envs[env_index].reset(seed)

    def collect(self) -> Rollout:
        """Step every environment ``steps_per_env`` times, recording finished episodes into the buffer."""
        n_envs, horizon = len(self.envs), self.config.steps_per_env
        obs_dim = self.spec.observation_dim
        act_rng = stream_rng(self.config.seed, Stream.ACT, self.update_index)

        states = np.zeros((n_envs, horizon, obs_dim))
        actions = np.zeros((n_envs, horizon), dtype=np.int64)
        rewards = np.zeros((n_envs, horizon))
        log_probs = np.zeros((n_envs, horizon))
        values = np.zeros((n_envs, horizon))
        dones = np.zeros((n_envs, horizon), dtype=bool)
        truncated = np.zeros((n_envs, horizon), dtype=bool)
        truncation_values = np.zeros((n_envs, horizon))
        keys: List[List[Any]] = [[] for _ in range(n_envs)]
        entropy_sum = 0.0

        for t in range(horizon):
            current = np.stack([env.observe(env.state) for env in self.envs])
            decision = act_batch(self.params, current, act_rng)
            entropy_sum += float(np.mean(decision.entropies))
            for i, env in enumerate(self.envs):
                key = env.state_key(env.state)
                action = int(decision.actions[i])
                log_prob = float(decision.log_probs[i])
                result = env.step(action)
                self.env_steps += 1
                states[i, t] = current[i]
                actions[i, t] = action
                rewards[i, t] = result.reward
                log_probs[i, t] = log_prob
                values[i, t] = decision.values[i]
                keys[i].append(key)
                self._partial[i].append(Transition(current[i], key, action, result.reward, log_prob))
                if result.done:
                    dones[i, t] = True
                    if result.truncated:
                        truncated[i, t] = True
                        truncation_values[i, t] = self._values(result.observation)[0]
                    self._finish_episode(i, result)

        bootstrap = self._values(np.stack([env.observe(env.state) for env in self.envs]))
        batches = [
            RolloutBatch(
                states=states[i],
                actions=actions[i],
                raw_rewards=rewards[i],
                shaped_rewards=rewards[i].copy(),
                old_log_probs=log_probs[i],
                values=values[i],
                dones=dones[i],
                truncated=truncated[i],
                truncation_values=truncation_values[i],
                bootstrap_value=float(bootstrap[i]),
                state_keys=keys[i],
            )
            for i in range(n_envs)
        ]
        return Rollout(batches, entropy_sum / horizon)

    def _bc_due(self) -> bool:
        opr = self.config.opr
        if not opr.bc_active:
            return False
        if opr.update_interval_unit == IntervalUnit.UPDATES:
            return (self.update_index + 1) % opr.update_interval == 0
        finished = len(self.episodes)
        if finished // opr.update_interval > self.bc_marker // opr.update_interval:
            self.bc_marker = finished
            return True
        return False

    def _augmentation(self) -> OprAugmentation:
        opr, seed = self.config.opr, self.config.seed
        aux = OprAugmentation()
        if self._bc_due():
            aux.lambda_bc = opr.lambda_bc
            aux.bc_epochs = opr.bc_epochs
            aux.sampler = BehaviorSampler(self.buffer, stream_rng(seed, Stream.BC, self.update_index))
        if opr.opr_enabled and opr.buffer_in_surrogate:
            aux.replay = build_replay_batch(self.buffer, self.params, self.config.ppo, opr)
            aux.replay_rng = stream_rng(seed, Stream.REPLAY, self.update_index)
        return aux

    def train_update(self, wall_clock_s: Optional[float] = None) -> MetricsRecord:
        """Run one collect/shape/GAE/update cycle and return its metrics record."""
        config = self.config
        learning_rate = self.learning_rate()
        first_episode = len(self.episodes)
        rollout = self.collect()
        finished = self.episodes.returns[first_episode:]

        shaped = [shape_rollout(batch, self.buffer, config.opr) for batch in rollout.batches]
        matched = [r.match_fraction * len(r.batch) for r in shaped]
        total_matched = sum(matched)
        abs_delta_sum = sum(r.mean_abs_delta * m for r, m in zip(shaped, matched))
        mean_abs_delta = abs_delta_sum / total_matched if total_matched else 0.0
        batch = concatenate([compute_gae(r.batch, config.ppo) for r in shaped])

        aux = self._augmentation()
        shuffle_rng = stream_rng(config.seed, Stream.SHUFFLE, self.update_index)
        self.params, self.optimizer, stats = ppo_update(
            self.params, self.optimizer, batch, config.ppo, shuffle_rng, learning_rate, aux
        )

        buffer_stats = self.buffer.stats()
        record = MetricsRecord(
            update_index=self.update_index,
            env_steps=self.env_steps,
            episodes=len(finished),
            mean_return=float(np.mean(finished)) if finished else None,
            max_return=float(np.max(finished)) if finished else None,
            policy_entropy=rollout.policy_entropy,
            surrogate_loss=stats.surrogate_loss,
            value_loss=stats.value_loss,
            entropy_term=stats.entropy_term,
            bc_loss=stats.bc_loss,
            total_loss=stats.total_loss,
            clip_fraction=stats.clip_fraction,
            grad_norm=stats.grad_norm,
            learning_rate=learning_rate,
            bc_applied=aux.sampler is not None and self.buffer.occupancy > 0,
            buffer_occupancy=buffer_stats.occupancy,
            buffer_episodes=buffer_stats.episodes,
            threshold=buffer_stats.threshold,
            mean_abs_delta=mean_abs_delta,
            match_fraction=total_matched / len(batch),
            wall_clock_s=wall_clock_s,
        )
        if finished:
            self.update_returns.append(float(np.mean(finished)))
        collapse = 0.1 * math.log(self.spec.action_count)
        if self.entropy_collapse_step is None and rollout.policy_entropy < collapse:
            self.entropy_collapse_step = self.env_steps
        self.update_index += 1
        return record

    def snapshot(self) -> Dict[str, Any]:
        """Trainer progress beyond parameters and optimizer, as JSON-ready data."""
        dumped = self.config.model_dump(mode="json")
        return {
            "config": {k: dumped[k] for k in _RESUME_KEYS},
            "update_index": self.update_index,
            "env_steps": self.env_steps,
            "next_episode_id": self.next_episode_id,
            "bc_marker": self.bc_marker,
            "episode_counts": list(self.episode_counts),
            "envs": [env.get_state() for env in self.envs],
            "partial": [[transition_to_dict(t) for t in partial] for partial in self._partial],
            "buffer": self.buffer.snapshot(),
            "episodes": {
                "returns": self.episodes.returns,
                "lengths": self.episodes.lengths,
                "end_steps": self.episodes.end_steps,
            },
            "update_returns": self.update_returns,
            "entropy_collapse_step": self.entropy_collapse_step,
        }

    def restore(self, checkpoint: LoadedCheckpoint) -> None:
        state = checkpoint.trainer_state
        if state is None:
            raise CheckpointError("checkpoint carries no trainer state", field="trainer")
        dumped = self.config.model_dump(mode="json")
        for key in _RESUME_KEYS:
            if state.get("config", {}).get(key) != dumped[key]:
                raise CheckpointError("does not match the current configuration", field=f"trainer.config.{key}")
        if checkpoint.params.observation_dim != self.spec.observation_dim:
            raise CheckpointError("observation size does not match the environment", field="networks")
        if len(state["envs"]) != len(self.envs):
            raise CheckpointError("environment count mismatch", field="trainer.envs")

        self.params = checkpoint.params
        self.optimizer = checkpoint.optimizer
        self.update_index = int(state["update_index"])
        self.env_steps = int(state["env_steps"])
        self.next_episode_id = int(state["next_episode_id"])
        self.bc_marker = int(state["bc_marker"])
        self.episode_counts = [int(c) for c in state["episode_counts"]]
        for env, env_state in zip(self.envs, state["envs"]):
            env.set_state(env_state)
        self._partial = [[transition_from_dict(t) for t in partial] for partial in state["partial"]]
        self.buffer = GoodEpisodeBuffer.restore(state["buffer"])
        episodes = state["episodes"]
        self.episodes = EpisodeLog(
            [float(r) for r in episodes["returns"]],
            [int(n) for n in episodes["lengths"]],
            [int(s) for s in episodes["end_steps"]],
        )
        self.update_returns = [float(r) for r in state["update_returns"]]
        collapse = state["entropy_collapse_step"]
        self.entropy_collapse_step = None if collapse is None else int(collapse)
        logger.info(f"Restored trainer at update {self.update_index} ({self.env_steps} env steps)")

    def partial_steps(self) -> int:
        return sum(len(p) for p in self._partial)

