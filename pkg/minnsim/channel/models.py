from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError


@dataclass(frozen=True)
class ChannelRealization:
    """Sampled fading segments; arrays may carry a leading batch dimension.

    H_tx_sim: [.., n_first, n_tx], H_sim_rx: [.., n_rx, n_last], H_direct: [.., n_rx, n_tx].
    A missing SIM path (no-SIM or digital links) leaves both segment matrices None.
    """

    H_tx_sim: np.ndarray = None
    H_sim_rx: np.ndarray = None
    H_direct: np.ndarray = None
    noise_sigma2: float = 0.0

    def __post_init__(self):
        if self.noise_sigma2 < 0:
            raise ConfigError(f"noise_sigma2 must be non-negative, got {self.noise_sigma2}")
        for name in ("H_tx_sim", "H_sim_rx", "H_direct"):
            value = getattr(self, name)
            if value is not None and not np.all(np.isfinite(value)):
                raise DataError(f"{name} contains non-finite entries")
        if (self.H_tx_sim is None) != (self.H_sim_rx is None):
            raise ConfigError("H_tx_sim and H_sim_rx must be given together")
        if self.H_tx_sim is None and self.H_direct is None:
            raise ConfigError("a realization needs a SIM path, a direct path, or both")

    @property
    def has_sim_path(self):
        return self.H_tx_sim is not None

    @property
    def batch_size(self):
        ref = self.H_tx_sim if self.has_sim_path else self.H_direct
        return ref.shape[0] if ref.ndim == 3 else 1

    def observation(self):
        """Flattened real/imag view of every present segment, shape (batch, obs_dim)."""
        parts = []
        for value in (self.H_tx_sim, self.H_sim_rx, self.H_direct):
            if value is None:
                continue
            value = value if value.ndim == 3 else value[None]
            flat = value.reshape(value.shape[0], -1)
            parts.extend([flat.real, flat.imag])
        batch = max(p.shape[0] for p in parts)
        return np.concatenate([np.broadcast_to(p, (batch, p.shape[1])) for p in parts], axis=1)

    def with_noise(self, noise_sigma2):
        return ChannelRealization(self.H_tx_sim, self.H_sim_rx, self.H_direct, noise_sigma2)
