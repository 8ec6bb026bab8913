"""Good-episode buffer with percentile-gated admission and episode-level FIFO eviction."""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, Hashable, Iterator, List, Optional, Tuple

import numpy as np

from opr_trainer.errors import DomainError

logger = logging.getLogger(__name__)

LookupKey = Tuple[Hashable, int]


@dataclass(slots=True)
class Transition:
    """One environment step as recorded by the acting policy."""

    state: np.ndarray
    state_key: Hashable
    action: int
    reward: float
    behavior_log_prob: float

    def __post_init__(self) -> None:
        if self.behavior_log_prob > 0.0:
            raise DomainError(f"behavior_log_prob must be <= 0, got {self.behavior_log_prob}")


@dataclass(slots=True)
class Episode:
    transitions: List[Transition]
    episode_id: int
    truncated: bool = False
    final_state: Optional[np.ndarray] = None

    @property
    def episodic_return(self) -> float:
        """Undiscounted sum of raw rewards."""
        return float(sum(t.reward for t in self.transitions))

    def __len__(self) -> int:
        return len(self.transitions)


class ReturnWindow:
    """FIFO of the most recent episodic returns."""

    def __init__(self, window_size: int = 100) -> None:
        if window_size < 1:
            raise DomainError("window_size must be positive")
        self.window_size = window_size
        self.returns: Deque[float] = deque(maxlen=window_size)

    def push(self, value: float) -> None:
        self.returns.append(float(value))

    def threshold(self, percentile: float) -> float:
        """Linear-interpolation percentile of the window; minus infinity while empty."""
        if not self.returns:
            return -math.inf
        return float(np.percentile(np.fromiter(self.returns, dtype=np.float64), percentile))

    def __len__(self) -> int:
        return len(self.returns)


class AdmissionReason(str, Enum):
    ADMITTED = "admitted"
    BELOW_THRESHOLD = "below_threshold"
    OVERSIZE = "oversize"


@dataclass(slots=True)
class AdmissionDecision:
    admitted: bool
    threshold: float
    reason: AdmissionReason
    evicted_ids: List[int] = field(default_factory=list)


@dataclass(slots=True)
class BufferStats:
    occupancy: int
    episodes: int
    episode_ids: List[int]
    returns: List[float]
    threshold: Optional[float]


class GoodEpisodeBuffer:
    """Stores whole high-return episodes up to ``max_transitions`` transitions.

    ``lookup`` maps (state key, action) to the behavior log-prob of the most recently admitted
    matching transition among the stored episodes.
    """

    def __init__(self, max_transitions: int = 100, percentile: float = 75.0, window_size: int = 100) -> None:
        if max_transitions < 1:
            raise DomainError("max_transitions must be positive")
        if not 0.0 <= percentile <= 100.0:
            raise DomainError("percentile must lie in [0, 100]")
        self.max_transitions = max_transitions
        self.percentile = percentile
        self.window = ReturnWindow(window_size)
        self.episodes: Deque[Episode] = deque()
        self.lookup: Dict[LookupKey, float] = {}
        self.threshold_history: Deque[float] = deque(maxlen=window_size)
        self._occupancy = 0

    @property
    def occupancy(self) -> int:
        return self._occupancy

    def __len__(self) -> int:
        return len(self.episodes)

    def current_threshold(self) -> float:
        return self.window.threshold(self.percentile)

    def record_episode(self, episode: Episode) -> AdmissionDecision:
        """Judge ``episode`` against the window of its predecessors, then push its return."""
        tau = self.current_threshold()
        episodic_return = episode.episodic_return
        self.window.push(episodic_return)
        self.threshold_history.append(tau)

        if len(episode) > self.max_transitions:
            logger.debug(f"Episode {episode.episode_id} rejected: {len(episode)} transitions exceed capacity")
            return AdmissionDecision(False, tau, AdmissionReason.OVERSIZE)
        if not episodic_return > tau:
            return AdmissionDecision(False, tau, AdmissionReason.BELOW_THRESHOLD)

        self.episodes.append(episode)
        self._occupancy += len(episode)
        self._index(episode)

        evicted: List[int] = []
        while self._occupancy > self.max_transitions:
            old = self.episodes.popleft()
            self._occupancy -= len(old)
            evicted.append(old.episode_id)
        if evicted:
            self.lookup = self.rebuild_lookup()
        logger.debug(
            f"Admitted episode {episode.episode_id} (return {episodic_return:.4f} > {tau:.4f}), evicted {evicted}"
        )
        return AdmissionDecision(True, tau, AdmissionReason.ADMITTED, evicted)

    def _index(self, episode: Episode) -> None:
        for t in episode.transitions:
            self.lookup[(t.state_key, t.action)] = t.behavior_log_prob

    def rebuild_lookup(self) -> Dict[LookupKey, float]:
        """Lookup table recomputed from the stored episodes in admission order."""
        table: Dict[LookupKey, float] = {}
        for episode in self.episodes:
            for t in episode.transitions:
                table[(t.state_key, t.action)] = t.behavior_log_prob
        return table

    def lookup_good_log_prob(self, state_key: Hashable, action: int) -> Optional[float]:
        return self.lookup.get((state_key, int(action)))

    def transitions(self) -> Iterator[Transition]:
        for episode in self.episodes:
            yield from episode.transitions

    def _arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        stored = list(self.transitions())
        states = np.stack([t.state for t in stored])
        actions = np.array([t.action for t in stored], dtype=np.int64)
        return states, actions

    def sample_transitions(self, rng: np.random.Generator, size: int) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Uniform sample without replacement of ``min(size, occupancy)`` stored (state, action) pairs."""
        if self._occupancy == 0:
            return None
        states, actions = self._arrays()
        idx = rng.choice(self._occupancy, size=min(size, self._occupancy), replace=False)
        return states[idx], actions[idx]

    def epoch_batches(self, rng: np.random.Generator, size: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        """One shuffled pass over every stored transition in chunks of ``size``."""
        if self._occupancy == 0:
            return []
        states, actions = self._arrays()
        perm = rng.permutation(self._occupancy)
        return [(states[perm[i : i + size]], actions[perm[i : i + size]]) for i in range(0, self._occupancy, size)]

    def stats(self) -> BufferStats:
        tau = self.current_threshold()
        return BufferStats(
            occupancy=self._occupancy,
            episodes=len(self.episodes),
            episode_ids=[e.episode_id for e in self.episodes],
            returns=[e.episodic_return for e in self.episodes],
            threshold=tau if math.isfinite(tau) else None,
        )

    def snapshot(self) -> Dict[str, Any]:
        """JSON-serializable copy of the buffer, window included."""
        return {
            "max_transitions": self.max_transitions,
            "percentile": self.percentile,
            "window_size": self.window.window_size,
            "window": list(self.window.returns),
            "threshold_history": [t if math.isfinite(t) else None for t in self.threshold_history],
            "episodes": [
                {
                    "episode_id": e.episode_id,
                    "truncated": e.truncated,
                    "final_state": None if e.final_state is None else e.final_state.tolist(),
                    "transitions": [transition_to_dict(t) for t in e.transitions],
                }
                for e in self.episodes
            ],
        }

    @classmethod
    def restore(cls, data: Dict[str, Any]) -> "GoodEpisodeBuffer":
        buffer = cls(int(data["max_transitions"]), float(data["percentile"]), int(data["window_size"]))
        for value in data["window"]:
            buffer.window.push(value)
        for tau in data["threshold_history"]:
            buffer.threshold_history.append(-math.inf if tau is None else float(tau))
        for raw in data["episodes"]:
            episode = Episode(
                transitions=[transition_from_dict(t) for t in raw["transitions"]],
                episode_id=int(raw["episode_id"]),
                truncated=bool(raw["truncated"]),
                final_state=None if raw["final_state"] is None else np.asarray(raw["final_state"], dtype=np.float64),
            )
            buffer.episodes.append(episode)
            buffer._occupancy += len(episode)
        buffer.lookup = buffer.rebuild_lookup()
        return buffer


def encode_key(key: Hashable) -> Any:
    if isinstance(key, tuple):
        return {"tuple": [encode_key(k) for k in key]}
    return key


def decode_key(raw: Any) -> Hashable:
    if isinstance(raw, dict):
        return tuple(decode_key(k) for k in raw["tuple"])
    if isinstance(raw, list):
        return tuple(decode_key(k) for k in raw)
    return raw  # type: ignore[no-any-return]


def transition_to_dict(t: Transition) -> Dict[str, Any]:
    return {
        "state": t.state.tolist(),
        "state_key": encode_key(t.state_key),
        "action": t.action,
        "reward": t.reward,
        "behavior_log_prob": t.behavior_log_prob,
    }


def transition_from_dict(raw: Dict[str, Any]) -> Transition:
    return Transition(
        state=np.asarray(raw["state"], dtype=np.float64),
        state_key=decode_key(raw["state_key"]),
        action=int(raw["action"]),
        reward=float(raw["reward"]),
        behavior_log_prob=float(raw["behavior_log_prob"]),
    )
