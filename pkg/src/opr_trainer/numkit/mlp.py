"""Dense multilayer perceptron with hand-derived backpropagation."""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from opr_trainer.errors import DomainError, NumericalError, ShapeError


class Activation(str, Enum):
    """Hidden-layer nonlinearity."""

    TANH = "tanh"
    RELU = "relu"


def activate(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation == Activation.TANH:
        return np.tanh(z)
    return np.maximum(z, 0.0)


def activation_grad(activation: Activation, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Derivative of the activation given its input ``z`` and output ``h``."""
    if activation == Activation.TANH:
        return 1.0 - h * h
    return (z > 0.0).astype(np.float64)


@dataclass(slots=True)
class MlpParams:
    """Weights and biases of an MLP; hidden layers are activated, the output layer is linear.

    ``weights[i]`` has shape ``(layer_sizes[i + 1], layer_sizes[i])``.
    """

    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    activation: Activation = Activation.TANH

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ShapeError(f"an MLP needs at least two layer sizes, got {self.layer_sizes}")
        n_layers = len(self.layer_sizes) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ShapeError(f"expected {n_layers} weight/bias pairs, got {len(self.weights)}/{len(self.biases)}")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != expected:
                raise ShapeError(f"weights[{i}] has shape {w.shape}, expected {expected}")
            if b.shape != (self.layer_sizes[i + 1],):
                raise ShapeError(f"biases[{i}] has shape {b.shape}, expected ({self.layer_sizes[i + 1]},)")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def arrays(self) -> List[np.ndarray]:
        """All parameter arrays, weights first then biases."""
        return [*self.weights, *self.biases]

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MlpParams":
        """Build a same-shaped MlpParams from arrays in ``arrays()`` order."""
        n = len(self.weights)
        return MlpParams(list(self.layer_sizes), list(arrays[:n]), list(arrays[n:]), self.activation)

    def zeros_like(self) -> "MlpParams":
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])

    def copy(self) -> "MlpParams":
        return self.with_arrays([a.copy() for a in self.arrays()])

    def num_parameters(self) -> int:
        return sum(a.size for a in self.arrays())

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(a))) for a in self.arrays())


@dataclass(slots=True)
class MlpCache:
    """Activation trace of one forward pass; ``post_activations[0]`` is the input batch."""

    pre_activations: List[np.ndarray] = field(default_factory=list)
    post_activations: List[np.ndarray] = field(default_factory=list)
    single: bool = False


def init_mlp(
    layer_sizes: Sequence[int],
    rng: np.random.Generator,
    activation: Activation = Activation.TANH,
    output_scale: float = 1.0,
) -> MlpParams:
    """Glorot-uniform weights, zero biases; the last layer's weights are multiplied by ``output_scale``."""
    sizes = [int(s) for s in layer_sizes]
    if any(s <= 0 for s in sizes):
        raise DomainError(f"layer sizes must be positive, got {sizes}")
    weights: List[np.ndarray] = []
    biases: List[np.ndarray] = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    weights[-1] = weights[-1] * output_scale
    return MlpParams(sizes, weights, biases, activation)


def mlp_forward(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, MlpCache]:
    """Evaluate the network on one input vector or a batch of row vectors."""
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[np.newaxis, :]
    if x.ndim != 2 or x.shape[1] != params.input_size:
        raise ShapeError(f"input shape {np.shape(inputs)} does not match layer size {params.input_size}")
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite network input", component="mlp_forward")

    cache = MlpCache(single=single)
    h = x
    cache.post_activations.append(h)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        cache.pre_activations.append(z)
        h = activate(params.activation, z) if i < last else z
        cache.post_activations.append(h)

    if not np.all(np.isfinite(h)):
        raise NumericalError("network produced non-finite outputs", component="mlp_forward")
    return (h[0] if single else h), cache


def mlp_backward_with_input(
    params: MlpParams, cache: MlpCache, output_grad: np.ndarray
) -> Tuple[MlpParams, np.ndarray]:
    """Backpropagate ``d loss / d output`` to every weight, bias and to the input.

    Gradients are summed over the batch rows.
    """
    if len(cache.pre_activations) != len(params.weights):
        raise ShapeError("activation cache was produced by a network of different depth")
    for i, z in enumerate(cache.pre_activations):
        if z.shape[1] != params.layer_sizes[i + 1]:
            raise ShapeError(f"stale cache: layer {i} width {z.shape[1]} != {params.layer_sizes[i + 1]}")

    delta = np.asarray(output_grad, dtype=np.float64)
    if cache.single and delta.ndim == 1:
        delta = delta[np.newaxis, :]
    if delta.shape != cache.post_activations[-1].shape:
        raise ShapeError(f"output gradient shape {np.shape(output_grad)} does not match network output")

    n = len(params.weights)
    weight_grads: List[np.ndarray] = [np.empty(0)] * n
    bias_grads: List[np.ndarray] = [np.empty(0)] * n
    for i in reversed(range(n)):
        weight_grads[i] = delta.T @ cache.post_activations[i]
        bias_grads[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i]
        if i > 0:
            delta = delta * activation_grad(params.activation, cache.pre_activations[i - 1], cache.post_activations[i])

    grads = MlpParams(list(params.layer_sizes), weight_grads, bias_grads, params.activation)
    input_grad = delta[0] if cache.single else delta
    return grads, input_grad


def mlp_backward(params: MlpParams, cache: MlpCache, output_grad: np.ndarray) -> MlpParams:
    """Gradient of a scalar loss with respect to every weight and bias."""
    grads, _ = mlp_backward_with_input(params, cache, output_grad)
    return grads
