import struct

import numpy as np
import pytest

from minnsim.channel import ChannelConfig
from minnsim.harness import Dataset
from minnsim.wave import SimStack

WAVELENGTH = 0.01


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_stack(rng):
    """Two 2x2 layers, half-wavelength pitch, five wavelengths apart."""
    return SimStack.build(2, 2, wavelength=WAVELENGTH, rng=rng)


@pytest.fixture
def small_channel():
    return ChannelConfig(model="rayleigh", n_tx=2, n_rx=2, snr_db=20.0, seed=7)


@pytest.fixture
def blobs(rng):
    """Two well separated 4-feature classes."""
    y = np.repeat([0, 1], 40)
    x = rng.standard_normal((80, 4)) * 0.3 + np.where(y[:, None] == 1, 1.5, -1.5)
    return Dataset(x, y, 2, "blobs")


def write_idx(path, magic, array):
    array = np.asarray(array, dtype=np.uint8)
    with open(path, "wb") as handle:
        handle.write(struct.pack(">I", magic))
        handle.write(struct.pack(f">{array.ndim}I", *array.shape))
        handle.write(array.tobytes())
    return str(path)


@pytest.fixture
def idx_files(tmp_path):
    """Factory writing an images/labels IDX pair of n random 8x8 digits."""

    def make(n=40, side=8, classes=10, seed=0, prefix="train"):
        local = np.random.default_rng(seed)
        images = local.integers(0, 256, (n, side, side))
        labels = np.arange(n) % classes
        # stamp the label into the first row so the task is learnable
        images[:, 0, :] = 0
        images[np.arange(n), 0, labels % side] = 255
        return (
            write_idx(tmp_path / f"{prefix}-images", 0x00000803, images),
            write_idx(tmp_path / f"{prefix}-labels", 0x00000801, labels),
        )

    return make
