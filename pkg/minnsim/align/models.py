from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError
from ..minn import encoder_forward, power_normalize
from ..tensorcore import no_grad


def collect_encodings(encoder, x, p_max=1.0):
    """Power-normalised TX signals of `encoder` on x, as a complex [n_tx*T x n] matrix."""
    with no_grad():
        s = power_normalize(encoder_forward(x, encoder), p_max)
    data = s.data
    if data.ndim == 2:
        data = data[None]
    return data.reshape(data.shape[0], -1).T


@dataclass
class AlignmentTask:
    """Two independently trained pairs, paired encodings on shared inputs and the map A -> B."""

    encoder_a: object
    decoder_b: object
    z_a: np.ndarray
    z_b: np.ndarray
    target_map: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.z_a = np.asarray(self.z_a)
        self.z_b = np.asarray(self.z_b)
        if self.z_a.ndim != 2 or self.z_b.ndim != 2:
            raise DimensionError("encodings must be [d x n] matrices")
        if self.z_a.shape[1] != self.z_b.shape[1]:
            raise DimensionError(
                f"unpaired encodings: Z_A has {self.z_a.shape[1]} samples, Z_B has {self.z_b.shape[1]}"
            )
        if self.z_a.shape[1] < self.z_a.shape[0]:
            raise ConfigError(f"need at least d_A = {self.z_a.shape[0]} paired samples, got {self.z_a.shape[1]}")

    @property
    def d_a(self):
        return self.z_a.shape[0]

    @property
    def d_b(self):
        return self.z_b.shape[0]

    @classmethod
    def from_pairs(cls, encoder_a, encoder_b, decoder_b, x, p_max=1.0, ridge=None):
        from .linear_map import fit_linear_map

        z_a = collect_encodings(encoder_a, x, p_max)
        z_b = collect_encodings(encoder_b, x, p_max)
        return cls(encoder_a, decoder_b, z_a, z_b, fit_linear_map(z_a, z_b, ridge))
