# mypy: ignore-errors

import numpy as np
import pytest

from opr_trainer.agent import AgentConfig
from opr_trainer.envs import EnvConfig
from opr_trainer.harness import ExperimentConfig
from opr_trainer.opr import OprConfig
from opr_trainer.ppo import PpoConfig


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def make_config():
    """Factory for small, fast DeepChain(10) experiments.

    Section overrides are merged field by field, e.g. ``make_config(opr={"alpha": 0.0})``.
    """

    def _make(env=None, ppo=None, opr=None, agent=None, **top):
        sections = {
            "env": EnvConfig(**{"env_name": "deep_chain", "chain_length": 10, **(env or {})}),
            "ppo": PpoConfig(**{"minibatch_size": 64, "epochs_per_update": 2, "learning_rate": 1e-3, **(ppo or {})}),
            "opr": OprConfig(**(opr or {})),
            "agent": AgentConfig(**{"hidden_size": 16, **(agent or {})}),
        }
        fields = {
            "run_name": "test",
            "total_steps": 1024,
            "steps_per_update": 256,
            "num_parallel_envs": 2,
            "seeds": [0, 1],
            **top,
        }
        return ExperimentConfig(**sections, **fields)

    return _make


@pytest.fixture
def config_file(tmp_path):
    """Write a flat key-value config file and return its path."""

    def _write(lines, name="experiment.env"):
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


SMALL_RUN_LINES = [
    "ENV_NAME=deep_chain",
    "CHAIN_LENGTH=10",
    "TOTAL_STEPS=512",
    "STEPS_PER_UPDATE=256",
    "NUM_PARALLEL_ENVS=2",
    "MINIBATCH_SIZE=64",
    "EPOCHS_PER_UPDATE=1",
    "HIDDEN_SIZE=8",
    "SEEDS=0,1",
]


@pytest.fixture
def small_run_lines():
    """Config lines of a two-update DeepChain(10) run."""
    return list(SMALL_RUN_LINES)
