"""Environment registry keyed by name."""

from typing import Any, Callable, Dict, List, Optional

from pydantic import BaseModel, Field

from opr_trainer.envs.base import Environment
from opr_trainer.envs.deep_chain import DeepChain
from opr_trainer.envs.distractor_grid import DistractorGrid
from opr_trainer.envs.mini_defense import MiniDefense
from opr_trainer.errors import ConfigError

_REGISTRY: Dict[str, Callable[..., Environment[Any]]] = {
    "deep_chain": DeepChain,
    "distractor_grid": DistractorGrid,
    "mini_defense": MiniDefense,
}


class EnvConfig(BaseModel):
    """Environment selection and size parameters."""

    env_name: str = Field(default="deep_chain", description="Registered environment name")
    chain_length: int = Field(default=20, ge=1, description="DeepChain length N")
    grid_size: int = Field(default=7, ge=3, description="DistractorGrid side length")
    num_hosts: int = Field(default=5, ge=2, description="MiniDefense host count; the last is the crown jewel")
    max_episode_steps: Optional[int] = Field(default=None, ge=1, description="Horizon override")

    def env_params(self) -> Dict[str, Any]:
        params: Dict[str, Any] = {"max_episode_steps": self.max_episode_steps}
        if self.env_name == "deep_chain":
            params["chain_length"] = self.chain_length
        elif self.env_name == "distractor_grid":
            params["grid_size"] = self.grid_size
        elif self.env_name == "mini_defense":
            params["num_hosts"] = self.num_hosts
        return params

    def build(self) -> Environment[Any]:
        return make_env(self.env_name, **self.env_params())


def list_envs() -> List[str]:
    return sorted(_REGISTRY)


def make_env(name: str, **params: Any) -> Environment[Any]:
    factory = _REGISTRY.get(name)
    if factory is None:
        raise ConfigError(f"unknown environment '{name}'; available: {', '.join(list_envs())}")
    return factory(**params)
