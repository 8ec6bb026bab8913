"""Adam optimizer with bias correction and global-norm gradient clipping."""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from opr_trainer.errors import NumericalError, ShapeError
from opr_trainer.numkit.mlp import MlpParams


@dataclass(slots=True)
class AdamState:
    """First and second moment estimates for one MlpParams, in ``arrays()`` order."""

    first_moment: List[np.ndarray]
    second_moment: List[np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(
        cls, params: MlpParams, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8
    ) -> "AdamState":
        return cls(
            first_moment=[np.zeros_like(a) for a in params.arrays()],
            second_moment=[np.zeros_like(a) for a in params.arrays()],
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )

    def copy(self) -> "AdamState":
        return AdamState(
            [m.copy() for m in self.first_moment],
            [v.copy() for v in self.second_moment],
            self.step_count,
            self.beta1,
            self.beta2,
            self.epsilon,
        )


def adam_step(
    params: MlpParams, grads: MlpParams, state: AdamState, learning_rate: float
) -> Tuple[MlpParams, AdamState]:
    """Return updated parameters and optimizer state; the inputs are left untouched."""
    param_arrays = params.arrays()
    grad_arrays = grads.arrays()
    if len(grad_arrays) != len(param_arrays) or len(state.first_moment) != len(param_arrays):
        raise ShapeError("gradient or optimizer state does not match the parameter list")
    for p, g, m in zip(param_arrays, grad_arrays, state.first_moment):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch in adam_step: param {p.shape}, grad {g.shape}, moment {m.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient, update aborted", component="adam")

    step = state.step_count + 1
    bc1 = 1.0 - state.beta1**step
    bc2 = 1.0 - state.beta2**step

    new_params: List[np.ndarray] = []
    new_m: List[np.ndarray] = []
    new_v: List[np.ndarray] = []
    for p, g, m, v in zip(param_arrays, grad_arrays, state.first_moment, state.second_moment):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_params.append(p - learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon))
        new_m.append(m)
        new_v.append(v)

    new_state = AdamState(new_m, new_v, step, state.beta1, state.beta2, state.epsilon)
    return params.with_arrays(new_params), new_state


def global_norm(groups: Sequence[MlpParams]) -> float:
    total = sum(float(np.sum(a * a)) for group in groups for a in group.arrays())
    return math.sqrt(total)


def clip_by_global_norm(groups: Sequence[MlpParams], max_norm: float) -> Tuple[List[MlpParams], float]:
    """Scale every gradient group by the same factor so the joint L2 norm is at most ``max_norm``."""
    norm = global_norm(groups)
    if not math.isfinite(norm):
        raise NumericalError("non-finite gradient norm", component="clip_by_global_norm")
    coef = max_norm / (norm + 1e-6)
    if coef >= 1.0:
        return list(groups), norm
    return [g.with_arrays([a * coef for a in g.arrays()]) for g in groups], norm
