"""Categorical actor-critic agent."""

from opr_trainer.agent.actor_critic import (
    ActionDecision,
    AgentConfig,
    AgentEvaluation,
    AgentGrads,
    AgentOptimizer,
    AgentParams,
    BatchDecision,
    act,
    act_batch,
    apply_gradients,
    evaluate,
    evaluate_backward,
    init_agent,
)

__all__ = [
    "ActionDecision",
    "AgentConfig",
    "AgentEvaluation",
    "AgentGrads",
    "AgentOptimizer",
    "AgentParams",
    "BatchDecision",
    "act",
    "act_batch",
    "apply_gradients",
    "evaluate",
    "evaluate_backward",
    "init_agent",
]
