"""Experiment configuration and the flat key-value config file loader."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Type, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, model_validator

from opr_trainer.agent import AgentConfig
from opr_trainer.envs import EnvConfig
from opr_trainer.errors import ConfigError
from opr_trainer.opr import OprConfig
from opr_trainer.ppo import PpoConfig

logger = logging.getLogger(__name__)


class ExperimentConfig(BaseModel):
    """Everything one training run needs; sections mirror the component packages."""

    env: EnvConfig = Field(default_factory=EnvConfig)
    ppo: PpoConfig = Field(default_factory=PpoConfig)
    opr: OprConfig = Field(default_factory=OprConfig)
    agent: AgentConfig = Field(default_factory=AgentConfig)

    run_name: str = Field(default="run", min_length=1, description="Name used for the run directory")
    total_steps: int = Field(default=300_000, ge=0, description="Environment steps to train for")
    steps_per_update: int = Field(default=2048, ge=1, description="Transitions collected per update")
    num_parallel_envs: int = Field(default=4, ge=1, description="Environments stepped in lockstep")
    seed: int = Field(default=0, ge=0, description="Master seed of a single run")
    seeds: List[int] = Field(default_factory=lambda: list(range(10)), description="Seeds of a comparison")
    output_dir: Optional[str] = Field(default=None, description="Run directory; defaults under OPR_RUNS_DIR")
    checkpoint_interval: int = Field(default=0, ge=0, description="Updates between checkpoints, 0 to disable")
    final_window: int = Field(default=100, ge=1, description="Episodes averaged for the final return")
    success_threshold: Optional[float] = Field(
        default=None, description="Return counted as success; defaults to the planner's optimal return"
    )
    success_tolerance: float = Field(
        default=0.05, ge=0.0, lt=1.0, description="Relative shortfall from the optimal return still counted as success"
    )

    @model_validator(mode="after")
    def _check_batching(self) -> "ExperimentConfig":
        if self.steps_per_update % self.num_parallel_envs:
            raise ValueError(
                f"steps_per_update ({self.steps_per_update}) must be divisible by "
                f"num_parallel_envs ({self.num_parallel_envs})"
            )
        if self.steps_per_update % self.ppo.minibatch_size:
            raise ValueError(
                f"steps_per_update ({self.steps_per_update}) must be divisible by "
                f"minibatch_size ({self.ppo.minibatch_size})"
            )
        return self

    @property
    def num_updates(self) -> int:
        return -(-self.total_steps // self.steps_per_update)

    @property
    def steps_per_env(self) -> int:
        return self.steps_per_update // self.num_parallel_envs


_SECTIONS: Dict[str, Type[BaseModel]] = {
    "env": EnvConfig,
    "ppo": PpoConfig,
    "opr": OprConfig,
    "agent": AgentConfig,
}


def config_from_mapping(raw: Mapping[str, Optional[str]]) -> ExperimentConfig:
    """Route flat keys to the section that owns the field name."""
    sections: Dict[str, Dict[str, Any]] = {name: {} for name in _SECTIONS}
    top: Dict[str, Any] = {}
    for key, value in raw.items():
        name = key.strip().lower()
        if value is None:
            raise ConfigError(f"key '{key}' has no value")
        section = next((s for s, model in _SECTIONS.items() if name in model.model_fields), None)
        if section is not None:
            sections[section][name] = value
        elif name in ExperimentConfig.model_fields and name not in _SECTIONS:
            top[name] = value
        else:
            raise ConfigError(f"unknown config key '{key}'")

    if "seeds" in top:
        try:
            top["seeds"] = [int(s) for s in str(top["seeds"]).split(",") if s.strip()]
        except ValueError as e:
            raise ConfigError(f"seeds must be a comma-separated list of integers, got '{top['seeds']}'") from e
    for name in ("output_dir", "success_threshold"):
        if str(top.get(name, "")).strip().lower() in ("none", "null"):
            top[name] = None
    if str(sections["env"].get("max_episode_steps", "")).strip().lower() in ("none", "null"):
        sections["env"]["max_episode_steps"] = None

    try:
        parts = {name: model(**sections[name]) for name, model in _SECTIONS.items()}
        return ExperimentConfig(**top, **parts)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load a flat ``key = value`` config file."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {config_path}")
    config = config_from_mapping(dotenv_values(config_path))
    logger.info(f"Loaded config {config_path} (env {config.env.env_name}, {config.total_steps} steps)")
    return config
