"""Categorical actor-critic built on numkit MLPs."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field

from opr_trainer.errors import DomainError, ShapeError
from opr_trainer.numkit import (
    Activation,
    AdamState,
    MlpCache,
    MlpParams,
    adam_step,
    categorical_entropy,
    entropy_logit_grad,
    init_mlp,
    mlp_backward_with_input,
    mlp_forward,
    softmax_logprobs,
)
from opr_trainer.numkit.mlp import activate, activation_grad

logger = logging.getLogger(__name__)


class AgentConfig(BaseModel):
    """Network architecture."""

    hidden_size: int = Field(default=64, ge=1, description="Width of every hidden layer")
    hidden_layers: int = Field(default=2, ge=1, description="Number of hidden layers")
    activation: Activation = Field(default=Activation.TANH, description="Hidden-layer activation")
    shared_trunk: bool = Field(default=False, description="Share hidden layers between actor and critic")
    policy_output_scale: float = Field(default=0.01, ge=0.0, description="Scale of the initial policy head weights")

    @property
    def hidden_sizes(self) -> List[int]:
        return [self.hidden_size] * self.hidden_layers


@dataclass(slots=True)
class AgentParams:
    """Policy and value networks, optionally on top of a shared trunk.

    With a trunk, the heads are single linear layers reading the activated trunk output.
    """

    policy_net: MlpParams
    value_net: MlpParams
    trunk: Optional[MlpParams] = None

    def __post_init__(self) -> None:
        if self.value_net.output_size != 1:
            raise ShapeError(f"value network must have one output, got {self.value_net.output_size}")
        if self.trunk is not None:
            width = self.trunk.output_size
            if self.policy_net.input_size != width or self.value_net.input_size != width:
                raise ShapeError("head input sizes must match the trunk output size")
        elif self.policy_net.input_size != self.value_net.input_size:
            raise ShapeError("policy and value networks must read the same observation size")

    @property
    def shared_trunk(self) -> bool:
        return self.trunk is not None

    @property
    def action_count(self) -> int:
        return self.policy_net.output_size

    @property
    def observation_dim(self) -> int:
        return self.trunk.input_size if self.trunk is not None else self.policy_net.input_size

    def networks(self) -> List[MlpParams]:
        """Networks in the fixed order (policy, value, trunk) shared by grads and optimizer."""
        nets = [self.policy_net, self.value_net]
        if self.trunk is not None:
            nets.append(self.trunk)
        return nets

    def with_networks(self, nets: List[MlpParams]) -> "AgentParams":
        return AgentParams(nets[0], nets[1], nets[2] if len(nets) > 2 else None)

    def copy(self) -> "AgentParams":
        return self.with_networks([n.copy() for n in self.networks()])


@dataclass(slots=True)
class AgentGrads:
    policy_net: MlpParams
    value_net: MlpParams
    trunk: Optional[MlpParams] = None

    def groups(self) -> List[MlpParams]:
        groups = [self.policy_net, self.value_net]
        if self.trunk is not None:
            groups.append(self.trunk)
        return groups

    @classmethod
    def from_groups(cls, groups: List[MlpParams]) -> "AgentGrads":
        return cls(groups[0], groups[1], groups[2] if len(groups) > 2 else None)

    def add(self, other: "AgentGrads") -> "AgentGrads":
        summed = [
            a.with_arrays([x + y for x, y in zip(a.arrays(), b.arrays())])
            for a, b in zip(self.groups(), other.groups())
        ]
        return AgentGrads.from_groups(summed)


@dataclass(slots=True)
class AgentOptimizer:
    """One Adam state per network, stepped together."""

    states: List[AdamState]

    @classmethod
    def for_agent(
        cls, params: AgentParams, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8
    ) -> "AgentOptimizer":
        return cls([AdamState.for_params(net, beta1, beta2, epsilon) for net in params.networks()])

    @property
    def step_count(self) -> int:
        return self.states[0].step_count

    def copy(self) -> "AgentOptimizer":
        return AgentOptimizer([s.copy() for s in self.states])


def apply_gradients(
    params: AgentParams, grads: AgentGrads, optimizer: AgentOptimizer, learning_rate: float
) -> tuple[AgentParams, AgentOptimizer]:
    nets: List[MlpParams] = []
    states: List[AdamState] = []
    for net, grad, state in zip(params.networks(), grads.groups(), optimizer.states):
        new_net, new_state = adam_step(net, grad, state, learning_rate)
        nets.append(new_net)
        states.append(new_state)
    return params.with_networks(nets), AgentOptimizer(states)


@dataclass(slots=True)
class ActionDecision:
    action: int
    log_prob: float
    value: float
    entropy: float


@dataclass(slots=True)
class BatchDecision:
    """Decisions for a batch of states, one row per state."""

    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    entropies: np.ndarray

    def __getitem__(self, i: int) -> ActionDecision:
        return ActionDecision(
            action=int(self.actions[i]),
            log_prob=float(self.log_probs[i]),
            value=float(self.values[i]),
            entropy=float(self.entropies[i]),
        )


@dataclass(slots=True)
class AgentEvaluation:
    """Differentiable evaluation of a batch; keep it to call ``evaluate_backward``."""

    log_probs: np.ndarray
    entropies: np.ndarray
    values: np.ndarray
    all_log_probs: np.ndarray
    actions: np.ndarray
    policy_cache: MlpCache
    value_cache: MlpCache
    trunk_cache: Optional[MlpCache] = None
    features: Optional[np.ndarray] = None


def init_agent(
    observation_dim: int, action_count: int, config: AgentConfig, rng: np.random.Generator
) -> AgentParams:
    if action_count < 2:
        raise DomainError(f"a categorical policy needs at least two actions, got {action_count}")
    hidden = config.hidden_sizes
    if config.shared_trunk:
        trunk = init_mlp([observation_dim, *hidden], rng, config.activation)
        policy = init_mlp([hidden[-1], action_count], rng, config.activation, config.policy_output_scale)
        value = init_mlp([hidden[-1], 1], rng, config.activation)
        return AgentParams(policy, value, trunk)
    policy = init_mlp([observation_dim, *hidden, action_count], rng, config.activation, config.policy_output_scale)
    value = init_mlp([observation_dim, *hidden, 1], rng, config.activation)
    return AgentParams(policy, value)


def _as_batch(params: AgentParams, states: np.ndarray) -> np.ndarray:
    batch = np.asarray(states, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[np.newaxis, :]
    if batch.ndim != 2 or batch.shape[1] != params.observation_dim:
        raise ShapeError(f"state shape {np.shape(states)} does not match observation size {params.observation_dim}")
    return batch


def _forward(
    params: AgentParams, batch: np.ndarray
) -> tuple[np.ndarray, np.ndarray, MlpCache, MlpCache, Optional[MlpCache], Optional[np.ndarray]]:
    trunk_cache: Optional[MlpCache] = None
    features: Optional[np.ndarray] = None
    head_input = batch
    if params.trunk is not None:
        trunk_out, trunk_cache = mlp_forward(params.trunk, batch)
        features = activate(params.trunk.activation, trunk_out)
        head_input = features
    logits, policy_cache = mlp_forward(params.policy_net, head_input)
    values, value_cache = mlp_forward(params.value_net, head_input)
    return logits, values[:, 0], policy_cache, value_cache, trunk_cache, features


def act_batch(params: AgentParams, states: np.ndarray, rng: np.random.Generator) -> BatchDecision:
    """Sample one action per row, drawing uniforms from ``rng`` in row order."""
    batch = _as_batch(params, states)
    logits, values, _, _, _, _ = _forward(params, batch)
    log_probs = softmax_logprobs(logits)
    cdf = np.cumsum(np.exp(log_probs), axis=1)
    draws = rng.random(batch.shape[0])
    actions = np.empty(batch.shape[0], dtype=np.int64)
    for i, u in enumerate(draws):
        idx = int(np.searchsorted(cdf[i], u * cdf[i, -1], side="right"))
        actions[i] = min(idx, params.action_count - 1)
    rows = np.arange(batch.shape[0])
    return BatchDecision(
        actions=actions,
        log_probs=log_probs[rows, actions],
        values=values,
        entropies=categorical_entropy(log_probs),
    )


def act(params: AgentParams, state: np.ndarray, rng: np.random.Generator) -> ActionDecision:
    """Sample an action for a single state."""
    if np.asarray(state).ndim != 1:
        raise ShapeError("act expects a single state vector")
    return act_batch(params, state, rng)[0]


def evaluate(params: AgentParams, states: np.ndarray, actions: np.ndarray) -> AgentEvaluation:
    """Log-probabilities of ``actions``, entropies and values under the current parameters."""
    batch = _as_batch(params, states)
    acts = np.asarray(actions, dtype=np.int64).reshape(-1)
    if acts.shape[0] != batch.shape[0]:
        raise ShapeError(f"{batch.shape[0]} states but {acts.shape[0]} actions")
    if acts.size and (acts.min() < 0 or acts.max() >= params.action_count):
        raise DomainError(f"action index out of range [0, {params.action_count})")
    logits, values, policy_cache, value_cache, trunk_cache, features = _forward(params, batch)
    all_log_probs = softmax_logprobs(logits)
    rows = np.arange(batch.shape[0])
    return AgentEvaluation(
        log_probs=all_log_probs[rows, acts],
        entropies=categorical_entropy(all_log_probs),
        values=values,
        all_log_probs=all_log_probs,
        actions=acts,
        policy_cache=policy_cache,
        value_cache=value_cache,
        trunk_cache=trunk_cache,
        features=features,
    )


def evaluate_backward(
    params: AgentParams,
    evaluation: AgentEvaluation,
    d_log_probs: Optional[np.ndarray] = None,
    d_entropies: Optional[np.ndarray] = None,
    d_values: Optional[np.ndarray] = None,
) -> AgentGrads:
    """Propagate per-sample loss gradients on log-probs, entropies and values into the parameters."""
    n = evaluation.log_probs.shape[0]
    zeros = np.zeros(n)
    d_lp = zeros if d_log_probs is None else np.asarray(d_log_probs, dtype=np.float64)
    d_ent = zeros if d_entropies is None else np.asarray(d_entropies, dtype=np.float64)
    d_v = zeros if d_values is None else np.asarray(d_values, dtype=np.float64)
    if d_lp.shape != (n,) or d_ent.shape != (n,) or d_v.shape != (n,):
        raise ShapeError("per-sample gradients must match the evaluated batch")

    probs = np.exp(evaluation.all_log_probs)
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(n), evaluation.actions] = 1.0
    d_logits = d_lp[:, None] * (one_hot - probs) + d_ent[:, None] * entropy_logit_grad(evaluation.all_log_probs)

    policy_grads, d_policy_in = mlp_backward_with_input(params.policy_net, evaluation.policy_cache, d_logits)
    value_grads, d_value_in = mlp_backward_with_input(params.value_net, evaluation.value_cache, d_v[:, None])

    trunk_grads: Optional[MlpParams] = None
    if params.trunk is not None and evaluation.trunk_cache is not None and evaluation.features is not None:
        d_features = d_policy_in + d_value_in
        trunk_out = evaluation.trunk_cache.post_activations[-1]
        d_trunk_out = d_features * activation_grad(params.trunk.activation, trunk_out, evaluation.features)
        trunk_grads, _ = mlp_backward_with_input(params.trunk, evaluation.trunk_cache, d_trunk_out)
    return AgentGrads(policy_grads, value_grads, trunk_grads)
