"""Chain MDP whose LEFT action pays a small immediate reward and resets progress."""

from typing import Optional, Tuple

import numpy as np

from opr_trainer.envs.base import Environment, EnvSpec, one_hot


class DeepChain(Environment[int]):
    """Positions 0..N; RIGHT advances, LEFT returns to 0 paying ``trap_reward``; reaching N pays ``goal_reward``."""

    LEFT = 0
    RIGHT = 1

    def __init__(
        self,
        chain_length: int = 20,
        trap_reward: float = 0.01,
        goal_reward: float = 10.0,
        max_episode_steps: Optional[int] = None,
    ) -> None:
        super().__init__()
        if chain_length < 1:
            raise ValueError("chain_length must be positive")
        self.chain_length = chain_length
        self.trap_reward = trap_reward
        self.goal_reward = goal_reward
        self.spec = EnvSpec(
            name="deep_chain",
            observation_dim=chain_length + 1,
            action_count=2,
            max_episode_steps=max_episode_steps or 2 * chain_length,
        )

    def initial_state(self, rng: np.random.Generator) -> int:
        return 0

    def transition(self, state: int, action: int) -> Tuple[int, float, bool]:
        if action == self.RIGHT:
            position = state + 1
            if position >= self.chain_length:
                return self.chain_length, self.goal_reward, True
            return position, 0.0, False
        return 0, self.trap_reward, False

    def observe(self, state: int) -> np.ndarray:
        return one_hot(state, self.chain_length + 1)

    def decode_state(self, raw: object) -> int:
        return int(raw)  # type: ignore[call-overload]
