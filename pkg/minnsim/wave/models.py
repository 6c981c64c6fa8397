from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, GeometryError
from ..tensorcore import ComplexTensor, parameter

SPEED_OF_LIGHT = 299_792_458.0


def carrier_wavelength(carrier_hz):
    return SPEED_OF_LIGHT / carrier_hz


def _plane_basis(normal):
    ref = np.array([0.0, 1.0, 0.0]) if abs(normal[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(ref, normal)
    u /= np.linalg.norm(u)
    return u, np.cross(normal, u)


@dataclass
class ElementGrid:
    """Planar rows x cols grid of metasurface elements centred on `origin`."""

    rows: int
    cols: int
    pitch: float
    element_area: float = None
    origin: tuple = (0.0, 0.0, 0.0)
    normal: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"grid needs at least one row and column, got {self.rows}x{self.cols}")
        if self.pitch <= 0:
            raise GeometryError(f"pitch must be positive, got {self.pitch}")
        if self.element_area is None:
            self.element_area = self.pitch ** 2
        if not 0 < self.element_area <= self.pitch ** 2 * (1 + 1e-12):
            raise GeometryError(
                f"element_area {self.element_area} must lie in (0, pitch^2={self.pitch ** 2}]"
            )
        normal = np.asarray(self.normal, dtype=np.float64)
        if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
            raise GeometryError(f"normal must be a unit vector, got {tuple(normal)}")
        self.origin = tuple(float(v) for v in self.origin)
        self.normal = tuple(float(v) for v in normal)

    @property
    def count(self):
        return self.rows * self.cols

    def positions(self):
        """Element centres, row-major, shape (count, 3)."""
        normal = np.asarray(self.normal)
        u, v = _plane_basis(normal)
        r = (np.arange(self.rows) - (self.rows - 1) / 2.0) * self.pitch
        c = (np.arange(self.cols) - (self.cols - 1) / 2.0) * self.pitch
        rr, cc = np.meshgrid(r, c, indexing="ij")
        offsets = cc.reshape(-1, 1) * u + rr.reshape(-1, 1) * v
        return np.asarray(self.origin) + offsets


@dataclass
class SimStack:
    """Stacked metasurface: geometry plus one trainable phase vector per layer."""

    layers: list
    layer_spacing: float
    wavelength: float
    phases: list = field(default=None)

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("a SimStack needs at least one layer")
        if self.layer_spacing <= 0:
            raise GeometryError(f"layer_spacing must be positive, got {self.layer_spacing}")
        if self.wavelength <= 0:
            raise GeometryError(f"wavelength must be positive, got {self.wavelength}")
        if self.phases is None:
            self.phases = [parameter(np.zeros(g.count), name=f"theta{k}") for k, g in enumerate(self.layers)]
        self.phases = [p if isinstance(p, ComplexTensor) else parameter(p) for p in self.phases]
        if len(self.phases) != len(self.layers):
            raise ConfigError(f"{len(self.phases)} phase vectors for {len(self.layers)} layers")
        for k, (grid, theta) in enumerate(zip(self.layers, self.phases)):
            if theta.shape != (grid.count,):
                raise ConfigError(
                    f"layer {k}: phase vector shape {list(theta.shape)}, expected [{grid.count}]"
                )
        self._propagation = None

    @classmethod
    def build(cls, n_layers, rows, cols=None, wavelength=None, pitch=None, layer_spacing=None,
              origin=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), rng=None):
        """Equal square-ish layers stacked along `normal`; pitch and spacing default to lambda/2 and 5 lambda."""
        from config import CARRIER_HZ

        cols = rows if cols is None else cols
        wavelength = wavelength or carrier_wavelength(CARRIER_HZ)
        pitch = pitch or wavelength / 2.0
        layer_spacing = layer_spacing or 5.0 * wavelength
        normal_v = np.asarray(normal, dtype=np.float64)
        layers = [
            ElementGrid(rows, cols, pitch, origin=tuple(np.asarray(origin) + k * layer_spacing * normal_v),
                        normal=normal)
            for k in range(n_layers)
        ]
        phases = None
        if rng is not None:
            phases = [parameter(rng.uniform(0.0, 2.0 * np.pi, g.count), name=f"theta{k}")
                      for k, g in enumerate(layers)]
        return cls(layers, layer_spacing, wavelength, phases)

    @property
    def layer_sizes(self):
        return [g.count for g in self.layers]

    @property
    def phase_count(self):
        return sum(self.layer_sizes)

    @property
    def first(self):
        return self.layers[0]

    @property
    def last(self):
        return self.layers[-1]

    def parameters(self):
        return list(self.phases)

    def propagation_matrices(self):
        """Constant inter-layer matrices P_{k->k+1}, built once."""
        if self._propagation is None:
            from .propagation import propagation_matrix

            self._propagation = [
                propagation_matrix(a, b, self.wavelength) for a, b in zip(self.layers[:-1], self.layers[1:])
            ]
        return self._propagation

    def describe(self):
        first = self.first
        return {
            "layers": len(self.layers),
            "rows": first.rows,
            "cols": first.cols,
            "pitch": first.pitch,
            "layer_spacing": self.layer_spacing,
            "wavelength": self.wavelength,
        }
