"""Counter-based random streams derived from one master seed.

Every stream is keyed by its purpose and counters, so adding environments or updates never
shifts the numbers another stream produces.
"""

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    INIT = 0
    ENV_RESET = 1
    ACT = 2
    SHUFFLE = 3
    BC = 4
    REPLAY = 5


def stream_rng(seed: int, stream: Stream, *counters: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(stream), *counters)))


def env_reset_seed(seed: int, env_index: int, episode_index: int) -> int:
    """Reset seed of episode ``episode_index`` on environment ``env_index``."""
    sequence = np.random.SeedSequence(seed, spawn_key=(int(Stream.ENV_RESET), env_index, episode_index))
    return int(sequence.generate_state(1)[0])
