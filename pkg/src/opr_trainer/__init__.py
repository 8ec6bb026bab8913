"""PPO with Optimistic Policy Regularization on desk-scale environments."""

__version__ = "0.1.0"
