"""Numerically stable categorical distribution helpers."""

import numpy as np

from opr_trainer.errors import DomainError, NumericalError


def softmax_logprobs(logits: np.ndarray) -> np.ndarray:
    """Log-softmax over the last axis using max subtraction.

    Accepts a single logit vector or a batch with one row per sample.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim == 0 or logits.shape[-1] == 0:
        raise DomainError("softmax_logprobs needs at least one logit")
    if not np.all(np.isfinite(logits)):
        raise NumericalError("non-finite logits", component="softmax")
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
    result: np.ndarray = shifted - log_norm
    return result


def categorical_entropy(log_probs: np.ndarray) -> np.ndarray:
    """Entropy of each distribution given its log-probabilities."""
    probs = np.exp(log_probs)
    entropy: np.ndarray = -np.sum(probs * log_probs, axis=-1)
    # Rounding can leave a tiny negative value for a one-hot distribution
    return np.maximum(entropy, 0.0)


def entropy_logit_grad(log_probs: np.ndarray) -> np.ndarray:
    """Gradient of the entropy with respect to the logits: -p * (log p + H)."""
    probs = np.exp(log_probs)
    entropy = -np.sum(probs * log_probs, axis=-1, keepdims=True)
    grad: np.ndarray = -probs * (log_probs + entropy)
    return grad
