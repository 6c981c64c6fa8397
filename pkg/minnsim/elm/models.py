from dataclasses import dataclass

import numpy as np

from ..channel import ChannelSampler
from ..errors import ConfigError, DimensionError

ELM_ACTIVATIONS = ("abs", "abs2", "tanh_mag", "relu_real")
DEFAULT_RIDGE_SCALE = 1e-3


@dataclass
class ElmModel:
    """Frozen hidden layer H (one TX antenna per feature, one RX element per hidden
    unit), an RX nonlinearity and a real readout W fitted in closed form.

    ridge_lambda=None resolves at every fit to ridge_scale * trace(G^T G) / n_hidden;
    fitted_lambda and ref_power record the values used by the last fit.
    """

    H: np.ndarray
    activation: str = "abs"
    ridge_lambda: float = None
    ridge_scale: float = DEFAULT_RIDGE_SCALE
    W: np.ndarray = None
    n_classes: int = 2
    fitted_lambda: float = None
    ref_power: float = None

    def __post_init__(self):
        self.H = np.asarray(self.H)
        if self.H.ndim != 2 or self.H.shape[0] < 1:
            raise DimensionError(f"H must be a non-empty [n_hidden x n_features] matrix, got {list(self.H.shape)}")
        if self.activation not in ELM_ACTIVATIONS:
            raise ConfigError(f"unknown ELM activation {self.activation!r}; expected one of {ELM_ACTIVATIONS}")
        if self.ridge_lambda is not None and self.ridge_lambda <= 0:
            raise ConfigError(f"ridge_lambda must be positive, got {self.ridge_lambda}")
        if self.n_classes < 2:
            raise ConfigError(f"an ELM classifier needs at least two classes, got {self.n_classes}")

    @property
    def n_hidden(self):
        return self.H.shape[0]

    @property
    def n_features(self):
        return self.H.shape[1]

    @property
    def binary(self):
        return self.n_classes == 2

    @property
    def fitted(self):
        return self.W is not None

    @classmethod
    def from_channel(cls, sampler, **kwargs):
        """MINN-ELM: the hidden layer is one direct-path realization of an uncontrolled channel."""
        if not isinstance(sampler, ChannelSampler) or sampler.mode != "no_sim":
            raise ConfigError("an ELM hidden layer is drawn from a no_sim channel sampler")
        return cls(sampler.sample(1).H_direct[0], **kwargs)

    @classmethod
    def digital(cls, n_hidden, n_features, rng, **kwargs):
        """Digital counterpart: i.i.d. real Gaussian hidden weights."""
        return cls(rng.standard_normal((n_hidden, n_features)) / np.sqrt(n_features), **kwargs)

    def arrays(self):
        out = {"H": self.H}
        if self.W is not None:
            out["W"] = self.W
        return out

    def metadata(self):
        return {
            "activation": self.activation,
            "ridge_lambda": self.ridge_lambda,
            "ridge_scale": self.ridge_scale,
            "n_classes": self.n_classes,
            "fitted_lambda": self.fitted_lambda,
            "ref_power": self.ref_power,
        }

    @classmethod
    def from_arrays(cls, arrays, metadata):
        return cls(arrays["H"], W=arrays.get("W"), **metadata)
