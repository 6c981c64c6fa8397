import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..tensorcore import ComplexTensor, ops, parameter
from ..wave import ElementGrid, SimStack, carrier_wavelength, coupling_matrix, energy_detect, sim_propagate

ENCODINGS = ("phase", "amplitude")


def _receptor_grid_shape(n_classes):
    rows = max(d for d in range(1, int(math.isqrt(n_classes)) + 1) if n_classes % d == 0)
    return rows, n_classes // rows


@dataclass
class AllMsModel:
    """Wave-only classifier: one feed antenna, an input layer whose element responses
    carry the features, trainable hidden phase layers, one absorbing receptor per class.
    """

    stack: SimStack
    input_shape: tuple
    n_classes: int
    encoding: str = "phase"
    encode_phase_scale: float = math.pi
    temperature: float = 10.0
    needs_channel = False

    def __post_init__(self):
        self.input_shape = tuple(self.input_shape)
        if self.encoding not in ENCODINGS:
            raise ConfigError(f"unknown encoding {self.encoding!r}; expected one of {ENCODINGS}")
        if self.stack.first.count != int(np.prod(self.input_shape)):
            raise ConfigError(
                f"input layer has {self.stack.first.count} elements for {int(np.prod(self.input_shape))} features"
            )
        if self.stack.last.count != self.n_classes:
            raise ConfigError(f"receptor layer has {self.stack.last.count} elements for {self.n_classes} classes")
        if len(self.stack.layers) < 3:
            raise ConfigError("an all-MS network needs input, at least one hidden, and receptor layers")
        first = self.stack.first
        normal = np.asarray(first.normal)
        feed = np.asarray(first.origin) - self.stack.layer_spacing * normal
        wavelength = self.stack.wavelength
        field = coupling_matrix(feed[None], (wavelength / 2.0) ** 2, first.positions(), normal, wavelength)[:, 0]
        self._feed = field * math.sqrt(field.size) / np.linalg.norm(field)

    @classmethod
    def build(cls, input_shape, n_classes, hidden_layers, rng, wavelength=None, **kwargs):
        from config import CARRIER_HZ

        wavelength = wavelength or carrier_wavelength(CARRIER_HZ)
        input_shape = tuple(input_shape)
        rows, cols = input_shape if len(input_shape) == 2 else (1, input_shape[0])
        pitch, spacing = wavelength / 2.0, 5.0 * wavelength
        shapes = [(rows, cols)] * (hidden_layers + 1) + [_receptor_grid_shape(n_classes)]
        layers = [ElementGrid(r, c, pitch, origin=(0.0, 0.0, k * spacing)) for k, (r, c) in enumerate(shapes)]
        # input and receptor layers stay at zero phase and are not trained
        phases = [ComplexTensor(np.zeros(g.count)) for g in layers]
        for k in range(1, len(layers) - 1):
            phases[k] = parameter(rng.uniform(0.0, 2.0 * np.pi, layers[k].count), name=f"theta{k}")
        return cls(SimStack(layers, spacing, wavelength, phases), input_shape, n_classes, **kwargs)

    def parameters(self):
        return self.stack.phases[1:-1]

    def named_parameters(self):
        return [(f"theta{k + 1}", p) for k, p in enumerate(self.parameters())]

    def encode(self, x):
        values = np.asarray(getattr(x, "data", x), dtype=np.float64).reshape(-1, self.stack.first.count)
        if self.encoding == "phase":
            response = np.exp(1j * self.encode_phase_scale * values)
        else:
            response = values.astype(np.complex128)
        return ComplexTensor(self._feed * response)

    def receptor_field(self, x):
        return ops.transpose(sim_propagate(self.stack, ops.transpose(self.encode(x))))

    def forward(self, x, realization=None, rng=None):
        energies = energy_detect(self.receptor_field(x))
        total = ops.add(ops.sum(energies, axis=-1, keepdims=True), 1e-300)
        logits = ops.multiply(ops.multiply(energies, ops.power(total, -1.0)), self.temperature)
        return logits, None
