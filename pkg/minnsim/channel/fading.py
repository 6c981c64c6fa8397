import math

import numpy as np

from ..errors import ConfigError, DimensionError
from ..tensorcore import ComplexTensor
from ..tensorcore import ops


def ula_steering(n, angle):
    """Unit-norm half-wavelength ULA response(s); `angle` scalar or (L,) -> (n,) or (n, L)."""
    k = np.arange(n).reshape(-1, *([1] * np.ndim(angle)))
    return np.exp(1j * np.pi * k * np.sin(angle)) / math.sqrt(n)


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def geometric_channel(n_rx, n_tx, n_scatterers, rng, gains=None, aoa=None, aod=None):
    """Sum of L scatterer paths, normalised so that E[||H||_F^2] = n_rx * n_tx.

    gains/aoa/aod override the random draws (used to pin a known geometry).
    """
    if n_scatterers < 1:
        raise ConfigError(f"geometric channel needs at least one scatterer, got {n_scatterers}")
    if n_rx < 1 or n_tx < 1:
        raise ConfigError(f"antenna counts must be positive, got n_rx={n_rx}, n_tx={n_tx}")
    gains = complex_gaussian(rng, n_scatterers) if gains is None else np.asarray(gains, dtype=np.complex128)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, n_scatterers) if aoa is None else np.asarray(aoa, dtype=np.float64)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, n_scatterers) if aod is None else np.asarray(aod, dtype=np.float64)
    a_rx = ula_steering(n_rx, np.atleast_1d(aoa))
    a_tx = ula_steering(n_tx, np.atleast_1d(aod))
    scale = math.sqrt(n_rx * n_tx / n_scatterers)
    return scale * (a_rx * np.atleast_1d(gains)) @ a_tx.conj().T


def rayleigh_channel(n_rx, n_tx, rng):
    return complex_gaussian(rng, (n_rx, n_tx))


def end_to_end_response(realization, T_sim=None):
    """H_eff = H_sim_rx T_sim H_tx_sim (+ H_direct); differentiable through T_sim."""
    h_eff = None
    if realization.has_sim_path:
        h1, h2 = realization.H_tx_sim, realization.H_sim_rx
        if T_sim is None:
            if h2.shape[-1] != h1.shape[-2]:
                raise DimensionError(
                    f"cascade shape mismatch: H_sim_rx {list(h2.shape)} x H_tx_sim {list(h1.shape)}"
                )
            h_eff = ComplexTensor(h2 @ h1)
        else:
            T_sim = ops.as_tensor(T_sim)
            if h2.shape[-1] != T_sim.shape[-2] or T_sim.shape[-1] != h1.shape[-2]:
                raise DimensionError(
                    f"cascade shape mismatch: H_sim_rx {list(h2.shape)} x T_sim {list(T_sim.shape)}"
                    f" x H_tx_sim {list(h1.shape)}"
                )
            h_eff = ops.complex_matmul(ops.complex_matmul(ComplexTensor(h2), T_sim), ComplexTensor(h1))
    if realization.H_direct is not None:
        direct = ComplexTensor(realization.H_direct)
        if h_eff is None:
            return direct
        if direct.shape[-2:] != h_eff.shape[-2:]:
            raise DimensionError(
                f"direct path {list(direct.shape)} does not match cascade {list(h_eff.shape)}"
            )
        h_eff = ops.add(h_eff, direct)
    return h_eff


def noise_power(snr_db, ref_power):
    if ref_power <= 0:
        raise ConfigError(f"ref_power must be positive, got {ref_power}")
    if snr_db == math.inf:
        return 0.0
    return ref_power * 10.0 ** (-snr_db / 10.0)


def awgn(y, snr_db, ref_power, rng):
    """y + n with n ~ CN(0, ref_power * 10^(-snr_db/10)); n enters the tape as a constant."""
    sigma2 = noise_power(snr_db, ref_power)
    if sigma2 == 0.0:
        return y
    return add_noise(y, sigma2, rng)


def add_noise(y, sigma2, rng):
    y = ops.as_tensor(y)
    if sigma2 == 0.0:
        return y
    noise = math.sqrt(sigma2) * complex_gaussian(rng, y.shape)
    return ops.add(y, ComplexTensor(noise))
