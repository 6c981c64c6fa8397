import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelRealization, noise_power
from ..errors import ConfigError, DimensionError, DivergenceError
from ..minn import MinnModel
from ..tensorcore import ComplexTensor, GradTape, no_grad, ops
from ..wave import sim_transfer

logger = logging.getLogger(__name__)


@dataclass
class Approximation:
    phases: list
    beta: complex
    error: float
    history: list = field(default_factory=list)

    @property
    def passivity(self):
        """|beta|; above 1 the realization needs gain the passive stack cannot give."""
        return abs(self.beta)


def optimal_scale(T, M):
    """beta = <T, M> / ||T||_F^2 (0 when T vanishes)."""
    norm = float(np.sum(np.abs(T) ** 2))
    return complex(np.sum(np.conj(T) * M) / norm) if norm > 0 else 0j


def _window(stack, M):
    d_b, d_a = M.shape
    if stack.first.count < d_a or stack.last.count < d_b:
        raise DimensionError(
            f"target {list(M.shape)} exceeds the stack ({stack.last.count} x {stack.first.count} elements)"
        )
    return d_b, d_a


def _relative_error(stack, M, m_norm2):
    with no_grad():
        T = sim_transfer(stack).data[: M.shape[0], : M.shape[1]]
    beta = optimal_scale(T, M)
    err2 = float(np.sum(np.abs(beta * T - M) ** 2)) / m_norm2
    if not math.isfinite(err2):
        raise DivergenceError(f"approximation error became {err2}")
    return beta, err2


def sim_approximate(M, stack, iters=200, lr=0.1, tol=1e-12, max_halvings=30):
    """Fit the stack phases so that beta T_sim ~ M on the leading d_B x d_A window.

    TX antennas feed the first d_A first-layer elements and the first d_B
    last-layer elements feed the RX antennas; the rest are masked out.
    Gradient steps use the envelope gradient at the optimal beta; a step is
    only taken when it does not increase the error (backtracking by halving).
    Phases are updated in place.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise DimensionError(f"target must be a matrix, got shape {list(M.shape)}")
    if lr <= 0 or iters < 0:
        raise ConfigError(f"need lr > 0 and iters >= 0, got lr={lr}, iters={iters}")
    d_b, d_a = _window(stack, M)
    m_norm2 = float(np.sum(np.abs(M) ** 2))
    if m_norm2 == 0.0:
        return Approximation([p.data.copy() for p in stack.phases], 0j, 0.0, [0.0])

    beta, err2 = _relative_error(stack, M, m_norm2)
    history = [math.sqrt(err2)]
    step = lr
    target = ComplexTensor(M)
    for it in range(iters):
        for p in stack.phases:
            p.grad = None
        with GradTape() as tape:
            T = sim_transfer(stack)[:d_b, :d_a]
            loss = ops.multiply(ops.sum(ops.abs2(ops.sub(ops.multiply(T, beta), target))), 1.0 / m_norm2)
            tape.backward(loss)
        saved = [p.data.copy() for p in stack.phases]
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in stack.phases]
        if sum(float(np.sum(g * g)) for g in grads) == 0.0:
            break

        accepted = False
        for _ in range(max_halvings):
            for p, s, g in zip(stack.phases, saved, grads):
                p.data[...] = s - step * g
            new_beta, new_err2 = _relative_error(stack, M, m_norm2)
            if new_err2 <= err2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            for p, s in zip(stack.phases, saved):
                p.data[...] = s
            break

        improvement = err2 - new_err2
        beta, err2 = new_beta, new_err2
        history.append(math.sqrt(err2))
        step = min(step * 2.0, lr)
        logger.debug("iteration %d: relative error %.6f", it, history[-1])
        if improvement < tol:
            break

    logger.info("SIM approximation: relative error %.4f after %d steps, |beta|=%.3e", history[-1], len(history) - 1, abs(beta))
    return Approximation([p.data.copy() for p in stack.phases], beta, history[-1], history)


def selection_realization(stack, n_tx, n_rx, beta=1.0, noise_sigma2=0.0):
    """One-to-one TX -> first-layer and last-layer -> RX couplings, RX side scaled by beta."""
    h_tx_sim = np.zeros((stack.first.count, n_tx), dtype=np.complex128)
    h_tx_sim[:n_tx, :n_tx] = np.eye(n_tx)
    h_sim_rx = np.zeros((n_rx, stack.last.count), dtype=np.complex128)
    h_sim_rx[:n_rx, :n_rx] = beta * np.eye(n_rx)
    return ChannelRealization(h_tx_sim, h_sim_rx, None, noise_sigma2)


def _accuracy(model, realization, dataset, rng, batch_size=256):
    h = model.effective_channel(realization).data
    h = h.reshape(h.shape[-2:])
    snr_db = model.channel_cfg.snr_db
    ref = model.p_max * float(np.sum(np.abs(h) ** 2)) / h.size
    sigma2 = noise_power(snr_db, ref) if ref > 0 else 0.0
    realization = realization.with_noise(sigma2)
    correct = 0
    with no_grad():
        for start in range(0, len(dataset.y), batch_size):
            xb, yb = dataset.x[start:start + batch_size], dataset.y[start:start + batch_size]
            logits, _ = model.forward(xb, realization, rng)
            correct += int(np.sum(np.argmax(logits.data, axis=-1) == yb))
    return correct / len(dataset.y)


def aligned_accuracy(encoder_a, phases, decoder_b, dataset, channel_cfg, stack, beta=1.0, rng=None, p_max=1.0):
    """Accuracy of encoder A -> SIM (fitted phases, gain beta) -> decoder B, noise at channel_cfg.snr_db."""
    for p, value in zip(stack.phases, phases):
        p.data[...] = value
    model = MinnModel(encoder_a, decoder_b, channel_cfg, stack, p_max=p_max, link="sim")
    realization = selection_realization(stack, channel_cfg.n_tx, channel_cfg.n_rx, beta)
    return _accuracy(model, realization, dataset, rng)


def digital_aligned_accuracy(encoder_a, M, decoder_b, dataset, channel_cfg, rng=None, p_max=1.0):
    """Reference pipeline: the map M applied digitally in place of the SIM."""
    model = MinnModel(encoder_a, decoder_b, channel_cfg, p_max=p_max, link="no_sim")
    realization = ChannelRealization(H_direct=np.asarray(M, dtype=np.complex128))
    return _accuracy(model, realization, dataset, rng)
