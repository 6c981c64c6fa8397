import numpy as np

from ..errors import ConfigError, DimensionError, RangeError
from ..minn import signal_energy
from ..tensorcore import ComplexTensor, ops

LOSS_KINDS = ("cross_entropy", "mse")


def task_loss(logits, target, kind="cross_entropy"):
    """Mean cross-entropy over class indices, or mean squared error against
    one-hot targets (or against a target array shaped like the logits)."""
    if kind not in LOSS_KINDS:
        raise ConfigError(f"unknown loss {kind!r}; expected one of {LOSS_KINDS}")
    logits = ops.as_tensor(logits)
    if logits.ndim == 1:
        logits = ops.reshape(logits, (1, -1))
    batch, n_classes = logits.shape
    target = np.asarray(target)

    if kind == "mse" and target.shape == logits.shape:
        dense_target = target.astype(np.float64)
    else:
        labels = target.reshape(-1)
        if labels.shape[0] != batch:
            raise DimensionError(f"{labels.shape[0]} targets for {batch} logit rows")
        if not np.issubdtype(labels.dtype, np.integer):
            raise DimensionError("class targets must be integers")
        bad = (labels < 0) | (labels >= n_classes)
        if np.any(bad):
            raise RangeError(f"class index {int(labels[bad][0])} outside [0, {n_classes})")
        if kind == "cross_entropy":
            picked = ops.log_softmax(logits)[np.arange(batch), labels]
            return ops.multiply(ops.mean(picked), -1.0)
        dense_target = np.eye(n_classes)[labels]
    return ops.mean(ops.abs2(ops.sub(logits, dense_target)))


def power_penalty(s, gamma):
    """gamma * mean over the batch of ||s||^2."""
    if gamma < 0:
        raise ConfigError(f"gamma must be non-negative, got {gamma}")
    if gamma == 0:
        return ComplexTensor(0.0)
    s = ops.as_tensor(s)
    if s.ndim == 2:
        s = ops.reshape(s, (1, *s.shape))
    return ops.multiply(ops.mean(signal_energy(s)), gamma)
