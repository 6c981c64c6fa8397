import numpy as np

from ..channel import add_noise, end_to_end_response
from ..errors import DimensionError
from ..tensorcore import ComplexTensor, ops
from ..wave import sim_transfer
from .layers import activate, run_dense


def _as_batch(x, input_shape):
    x = ops.as_tensor(x)
    if x.shape == input_shape:
        return ops.reshape(x, (1, *input_shape)), True
    if x.shape[1:] != input_shape:
        raise DimensionError(f"encoder input shape {list(x.shape)} does not match {list(input_shape)}")
    return x, False


def encoder_forward(x, p):
    """Real features -> complex TX signal [n_tx x T] (batched inputs give [B x n_tx x T])."""
    x, single = _as_batch(x, p.input_shape)
    batch = x.shape[0]
    if p.convs:
        h = ops.reshape(x, (batch, 1, *p.input_shape))
        for conv in p.convs:
            h = ops.pool2d(activate(conv(h), p.activation), 2, p.pool)
        h = ops.reshape(h, (batch, -1))
    else:
        h = ops.reshape(x, (batch, -1))
    out = run_dense(p.dense, h, p.activation)
    half = p.n_tx * p.time_slots
    s = ops.combine(out[:, :half], out[:, half:])
    s = ops.reshape(s, (batch, p.n_tx, p.time_slots))
    return s[0] if single else s


def signal_energy(s):
    """||s||^2 per sample over the (n_tx, T) block."""
    return ops.sum(ops.abs2(s), axis=(-2, -1), keepdims=True)


def power_normalize(s, P_max, mode="hard_norm"):
    """Scale every sample to energy P_max (hard_norm) or pass it through (soft_penalty)."""
    if mode == "soft_penalty":
        return s
    energy = signal_energy(s)
    # all-zero samples pass through unchanged
    zero = (energy.data == 0.0) * float(P_max)
    factor = ops.power(ops.multiply(ops.add(energy, zero), 1.0 / P_max), -0.5)
    return ops.multiply(s, factor)


def decoder_forward(y, p):
    """Received [.. x n_rx x T] complex -> logits, via stacked real/imag parts."""
    y = ops.as_tensor(y)
    single = y.ndim == 2
    batch = 1 if single else y.shape[0]
    flat = ops.stack_real_imag(ops.reshape(y, (batch, p.n_rx * p.time_slots)))
    logits = run_dense(p.dense, flat, p.activation)
    return logits[0] if single else logits


def dynamic_phase_controller(obs, c):
    """Channel observation (B, obs_dim) -> one phase tensor (B, n_k) per SIM layer."""
    obs = ops.as_tensor(obs)
    if obs.ndim == 1:
        obs = ops.reshape(obs, (1, -1))
    if obs.shape[-1] != c.obs_dim:
        raise DimensionError(f"controller observation has {obs.shape[-1]} entries, expected {c.obs_dim}")
    theta = run_dense(c.dense, obs, c.activation)
    phases, start = [], 0
    for size in c.layer_sizes:
        phases.append(theta[:, start:start + size])
        start += size
    return phases


def effective_channel(model, realization):
    """H_eff for a realization; the controller (if any) sets the phases first."""
    if model.link != "sim":
        return end_to_end_response(realization)
    phases = None
    if model.controller is not None:
        phases = dynamic_phase_controller(realization.observation(), model.controller)
    return end_to_end_response(realization, sim_transfer(model.stack, phases))


def minn_forward(x, model, realization, rng=None, return_signal=False):
    """logits = decoder(awgn(H_eff encoder(x))); rng=None transmits noise-free."""
    s = power_normalize(encoder_forward(x, model.encoder), model.p_max, model.power_mode)
    h_eff = effective_channel(model, realization)
    y = ops.complex_matmul(h_eff, s)
    if rng is not None and realization.noise_sigma2 > 0:
        y = add_noise(y, realization.noise_sigma2, rng)
    logits = decoder_forward(y, model.decoder)
    return (logits, s) if return_signal else logits


def predict(x, model, realization, rng=None):
    """Class indices; ties resolve to the lowest index."""
    logits = minn_forward(x, model, realization, rng)
    return np.argmax(logits.data, axis=-1)


def transmit_power(s):
    data = s.data if isinstance(s, ComplexTensor) else np.asarray(s)
    return np.sum(np.abs(data) ** 2, axis=(-2, -1))
