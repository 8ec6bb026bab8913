"""Deterministic desk-scale environments."""

from opr_trainer.envs.base import Environment, EnvSpec, StepResult, one_hot
from opr_trainer.envs.deep_chain import DeepChain
from opr_trainer.envs.distractor_grid import DistractorGrid
from opr_trainer.envs.mini_defense import AlertKind, DefenderAction, DefenseState, MiniDefense
from opr_trainer.envs.planning import optimal_return
from opr_trainer.envs.registry import EnvConfig, list_envs, make_env

__all__ = [
    "AlertKind",
    "DeepChain",
    "DefenderAction",
    "DefenseState",
    "DistractorGrid",
    "EnvConfig",
    "EnvSpec",
    "Environment",
    "MiniDefense",
    "StepResult",
    "list_envs",
    "make_env",
    "one_hot",
    "optimal_return",
]
