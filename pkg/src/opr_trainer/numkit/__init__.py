"""Dense numerics: MLPs, Adam and categorical helpers."""

from opr_trainer.numkit.adam import AdamState, adam_step, clip_by_global_norm, global_norm
from opr_trainer.numkit.mlp import (
    Activation,
    MlpCache,
    MlpParams,
    init_mlp,
    mlp_backward,
    mlp_backward_with_input,
    mlp_forward,
)
from opr_trainer.numkit.softmax import categorical_entropy, entropy_logit_grad, softmax_logprobs

__all__ = [
    "Activation",
    "AdamState",
    "MlpCache",
    "MlpParams",
    "adam_step",
    "categorical_entropy",
    "clip_by_global_norm",
    "entropy_logit_grad",
    "global_norm",
    "init_mlp",
    "mlp_backward",
    "mlp_backward_with_input",
    "mlp_forward",
    "softmax_logprobs",
]
