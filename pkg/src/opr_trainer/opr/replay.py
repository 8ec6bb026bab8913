"""Re-scoring buffer episodes so they can join the clipped surrogate."""

from typing import List, Optional

import numpy as np

from opr_trainer.agent import AgentParams, evaluate
from opr_trainer.opr.buffer import GoodEpisodeBuffer
from opr_trainer.opr.hyperparams import OprConfig, ShapingMode
from opr_trainer.opr.shaping import shape_episode_rewards
from opr_trainer.ppo.hyperparams import PpoConfig
from opr_trainer.ppo.rollout import RolloutBatch, compute_gae, concatenate


def build_replay_batch(
    buffer: GoodEpisodeBuffer, params: AgentParams, ppo_config: PpoConfig, opr_config: OprConfig
) -> Optional[RolloutBatch]:
    """One RolloutBatch over every stored episode, valued by the current critic.

    The recorded behavior log-probs act as pi_old. In ``buffer_only`` shaping mode the replayed
    rewards are shaped against the current policy.
    """
    batches: List[RolloutBatch] = []
    for episode in buffer.episodes:
        n = len(episode)
        if n == 0:
            continue
        states = np.stack([t.state for t in episode.transitions])
        actions = np.array([t.action for t in episode.transitions], dtype=np.int64)
        evaluation = evaluate(params, states, actions)
        raw = np.array([t.reward for t in episode.transitions], dtype=np.float64)
        if opr_config.shaping_mode == ShapingMode.BUFFER_ONLY:
            shaped = shape_episode_rewards(episode, buffer, evaluation.log_probs, opr_config)
        else:
            shaped = raw.copy()

        dones = np.zeros(n, dtype=bool)
        dones[-1] = True
        truncated = np.zeros(n, dtype=bool)
        truncation_values = np.zeros(n)
        if episode.truncated and episode.final_state is not None:
            truncated[-1] = True
            truncation_values[-1] = float(evaluate(params, episode.final_state, [0]).values[0])

        batch = RolloutBatch(
            states=states,
            actions=actions,
            raw_rewards=raw,
            shaped_rewards=shaped,
            old_log_probs=np.array([t.behavior_log_prob for t in episode.transitions]),
            values=evaluation.values,
            dones=dones,
            truncated=truncated,
            truncation_values=truncation_values,
            state_keys=[t.state_key for t in episode.transitions],
        )
        batches.append(compute_gae(batch, ppo_config, use_shaped=True))
    if not batches:
        return None
    return concatenate(batches)
