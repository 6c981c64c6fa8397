import numpy as np

from ..errors import ConfigError
from .models import GradTape, no_grad


def _loss_value(graph):
    with no_grad():
        return float(np.real(graph().data).reshape(-1)[0])


def finite_diff_check(graph, param, eps=1e-6):
    """Compare tape gradients of `graph()` w.r.t. a real leaf with central differences.

    `graph` is a zero-argument callable rebuilding the real scalar loss from the
    current parameter values. Returns the max relative error over all
    coordinates of `param`.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be positive, got {eps}")

    param.grad = None
    with GradTape() as tape:
        loss = graph()
    if loss._tracked and len(tape):
        tape.backward(loss)
    analytic = np.zeros(param.shape) if param.grad is None else param.grad.copy()

    numeric = np.zeros(param.shape)
    flat = param.data.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        upper = _loss_value(graph)
        flat[i] = saved - eps
        lower = _loss_value(graph)
        flat[i] = saved
        numeric.flat[i] = (upper - lower) / (2.0 * eps)

    rel = np.abs(analytic - numeric) / (np.abs(analytic) + 1e-12)
    return float(rel.max()) if rel.size else 0.0
