"""Environment contract shared by the bundled desk-scale tasks."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Generic, Hashable, Optional, Tuple, TypeVar

import numpy as np

from opr_trainer.errors import DomainError, EnvUsageError

logger = logging.getLogger(__name__)

S = TypeVar("S", bound=Hashable)


@dataclass(frozen=True, slots=True)
class EnvSpec:
    name: str
    observation_dim: int
    action_count: int
    max_episode_steps: int

    def __post_init__(self) -> None:
        if self.action_count < 2:
            raise DomainError(f"{self.name}: action_count must be at least 2")
        if self.max_episode_steps <= 0:
            raise DomainError(f"{self.name}: max_episode_steps must be positive")


@dataclass(slots=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    state_key: Hashable

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class Environment(ABC, Generic[S]):
    """Deterministic environment defined by a pure transition model.

    ``step`` and the DP planner share ``transition``, so planned and simulated returns agree.
    """

    spec: EnvSpec

    def __init__(self) -> None:
        self._state: Optional[S] = None
        self._elapsed = 0
        self._done = True

    @abstractmethod
    def initial_state(self, rng: np.random.Generator) -> S: ...

    @abstractmethod
    def transition(self, state: S, action: int) -> Tuple[S, float, bool]:
        """Return (next state, reward, terminated)."""

    @abstractmethod
    def observe(self, state: S) -> np.ndarray: ...

    def state_key(self, state: S) -> Hashable:
        return state

    def planning_key(self, state: S) -> Hashable:
        """Part of the state that determines future rewards; the DP planner memoizes on it."""
        return state

    def encode_state(self, state: S) -> Any:
        return state

    def decode_state(self, raw: Any) -> S:
        return raw  # type: ignore[no-any-return]

    @property
    def state(self) -> S:
        if self._state is None:
            raise EnvUsageError(f"{self.spec.name}: reset() must be called first")
        return self._state

    def reset(self, seed: int) -> StepResult:
        rng = np.random.default_rng(seed)
        self._state = self.initial_state(rng)
        self._elapsed = 0
        self._done = False
        return StepResult(self.observe(self._state), 0.0, False, False, self.state_key(self._state))

    def step(self, action: int) -> StepResult:
        if self._state is None or self._done:
            raise EnvUsageError(f"{self.spec.name}: step() called on a finished episode; call reset()")
        if not 0 <= int(action) < self.spec.action_count:
            raise DomainError(f"{self.spec.name}: action {action} outside [0, {self.spec.action_count})")
        next_state, reward, terminated = self.transition(self._state, int(action))
        self._state = next_state
        self._elapsed += 1
        truncated = self._elapsed >= self.spec.max_episode_steps and not terminated
        self._done = terminated or truncated
        return StepResult(self.observe(next_state), float(reward), terminated, truncated, self.state_key(next_state))

    def get_state(self) -> Dict[str, Any]:
        return {
            "state": None if self._state is None else self.encode_state(self._state),
            "elapsed": self._elapsed,
            "done": self._done,
        }

    def set_state(self, data: Dict[str, Any]) -> None:
        self._state = None if data["state"] is None else self.decode_state(data["state"])
        self._elapsed = int(data["elapsed"])
        self._done = bool(data["done"])


def one_hot(index: int, size: int) -> np.ndarray:
    vec = np.zeros(size)
    vec[index] = 1.0
    return vec
