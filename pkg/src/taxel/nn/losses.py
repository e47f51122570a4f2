import numpy as np

from ..errors import DomainError


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, label):
    """Cross-entropy of softmax(logits) against integer labels.

    ``logits`` may be 1-D with an int label, or (N, C) with N labels; the
    batched loss is the mean and its gradient is scaled accordingly.
    """
    logits = np.asarray(logits, dtype=float)
    single = logits.ndim == 1
    L = logits[None] if single else logits
    y = np.atleast_1d(np.asarray(label))
    C = L.shape[1]
    if y.shape[0] != L.shape[0] or np.any((y < 0) | (y >= C)):
        raise DomainError(f"labels {y.tolist()} out of range for {C} classes")
    z = L - L.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(L.shape[0])
    losses = logsumexp - z[rows, y]
    grad = softmax(L)
    grad[rows, y] -= 1.0
    if single:
        return float(losses[0]), grad[0]
    return float(losses.mean()), grad / L.shape[0]


def mse_loss(pred, target):
    """Squared error; batched inputs give the mean loss and matching gradient."""
    pred = np.asarray(pred, dtype=float)
    diff = pred - np.asarray(target, dtype=float)
    if diff.ndim == 0:
        return float(diff**2), 2.0 * diff
    return float(np.mean(diff**2)), 2.0 * diff / diff.size
