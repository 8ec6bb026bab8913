"""Exact optimal returns for the bundled environments by dynamic programming."""

import logging
import sys
from typing import Any, Dict, Hashable, Tuple

import numpy as np

from opr_trainer.envs.base import Environment
from opr_trainer.errors import UnsupportedError

logger = logging.getLogger(__name__)


def optimal_return(env: Environment[Any], seed: int = 0, max_states: int = 1_000_000) -> float:
    """Best undiscounted episodic return from the initial state drawn with ``seed``.

    Memoizes over (planning key, steps left); raises UnsupportedError once more than
    ``max_states`` entries would be needed.
    """
    horizon = env.spec.max_episode_steps
    actions = range(env.spec.action_count)
    memo: Dict[Tuple[Hashable, int], float] = {}

    def value(state: Any, steps_left: int) -> float:
        if steps_left == 0:
            return 0.0
        key = (env.planning_key(state), steps_left)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if len(memo) >= max_states:
            raise UnsupportedError(f"{env.spec.name}: more than {max_states} planning states")
        best = -np.inf
        for action in actions:
            next_state, reward, terminated = env.transition(state, action)
            total = reward if terminated else reward + value(next_state, steps_left - 1)
            best = max(best, total)
        memo[key] = float(best)
        return float(best)

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * horizon + 100))
    try:
        result = value(env.initial_state(np.random.default_rng(seed)), horizon)
    finally:
        sys.setrecursionlimit(limit)
    logger.debug(f"{env.spec.name}: optimal return {result} over {len(memo)} planning states")
    return result
