"""Gridworld with a nearby small terminal reward and a distant large one."""

from typing import Optional, Tuple

import numpy as np

from opr_trainer.envs.base import Environment, EnvSpec, one_hot

Cell = Tuple[int, int]

_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))


class DistractorGrid(Environment[Cell]):
    """Actions up/down/left/right with wall clamping; both reward cells end the episode."""

    def __init__(
        self,
        grid_size: int = 7,
        start: Cell = (0, 0),
        distractor: Cell = (0, 2),
        goal: Optional[Cell] = None,
        distractor_reward: float = 1.0,
        goal_reward: float = 20.0,
        max_episode_steps: Optional[int] = None,
    ) -> None:
        super().__init__()
        self.grid_size = grid_size
        self.start = start
        self.distractor = distractor
        self.goal = goal if goal is not None else (grid_size - 1, grid_size - 1)
        self.distractor_reward = distractor_reward
        self.goal_reward = goal_reward
        for name, cell in (("start", self.start), ("distractor", self.distractor), ("goal", self.goal)):
            if not all(0 <= c < grid_size for c in cell):
                raise ValueError(f"{name} cell {cell} lies outside a {grid_size}x{grid_size} grid")
        self.spec = EnvSpec(
            name="distractor_grid",
            observation_dim=grid_size * grid_size,
            action_count=4,
            max_episode_steps=max_episode_steps or 60,
        )

    def initial_state(self, rng: np.random.Generator) -> Cell:
        return self.start

    def transition(self, state: Cell, action: int) -> Tuple[Cell, float, bool]:
        dr, dc = _MOVES[action]
        row = min(max(state[0] + dr, 0), self.grid_size - 1)
        col = min(max(state[1] + dc, 0), self.grid_size - 1)
        cell = (row, col)
        if cell == self.goal:
            return cell, self.goal_reward, True
        if cell == self.distractor:
            return cell, self.distractor_reward, True
        return cell, 0.0, False

    def observe(self, state: Cell) -> np.ndarray:
        return one_hot(state[0] * self.grid_size + state[1], self.grid_size * self.grid_size)

    def encode_state(self, state: Cell) -> list[int]:
        return [state[0], state[1]]

    def decode_state(self, raw: object) -> Cell:
        row, col = raw  # type: ignore[misc]
        return int(row), int(col)
