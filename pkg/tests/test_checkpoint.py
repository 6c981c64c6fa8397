import struct

import numpy as np
import pytest

from minnsim.channel import ChannelConfig
from minnsim.checkpoint import MAGIC, load_checkpoint, load_state, save_checkpoint, state_dict
from minnsim.errors import DimensionError, FormatError, TruncatedFileError
from minnsim.minn import DecoderParams, EncoderParams, MinnModel


@pytest.fixture
def model(rng, tiny_stack):
    encoder = EncoderParams.init((4,), 2, rng, hidden=(3,))
    decoder = DecoderParams.init(2, 2, rng, hidden=(3,))
    return MinnModel(encoder, decoder, ChannelConfig(n_tx=2, n_rx=2), tiny_stack)


def test_arrays_and_metadata_survive_a_round_trip(tmp_path, rng):
    arrays = {
        "weights": rng.standard_normal((3, 2)),
        "map": rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
        "scalar": np.array(2.5),
    }
    path = tmp_path / "a.ckpt"
    save_checkpoint(path, arrays, {"kind": "alignment", "error": 0.25})
    loaded, meta = load_checkpoint(path)
    assert meta == {"kind": "alignment", "error": 0.25}
    assert list(loaded) == list(arrays)
    for name, value in arrays.items():
        assert loaded[name].shape == value.shape
        assert np.array_equal(loaded[name], value)
    assert np.iscomplexobj(loaded["map"]) and not np.iscomplexobj(loaded["weights"])


def test_header_errors(tmp_path):
    path = tmp_path / "x.ckpt"
    save_checkpoint(path, {"w": np.ones(4)})
    blob = path.read_bytes()

    path.write_bytes(b"NOTACKPT" + blob[8:])
    with pytest.raises(FormatError):
        load_checkpoint(path)
    path.write_bytes(MAGIC + struct.pack("<H", 99) + blob[10:])
    with pytest.raises(FormatError, match="version 99"):
        load_checkpoint(path)
    path.write_bytes(blob[:-8])
    with pytest.raises(TruncatedFileError):
        load_checkpoint(path)


def test_state_dict_restores_a_model(tmp_path, model):
    path = tmp_path / "model.ckpt"
    saved = state_dict(model)
    save_checkpoint(path, saved)
    for p in model.parameters():
        p.data += 1.0
    arrays, _ = load_checkpoint(path)
    load_state(model, arrays)
    for name, p in model.named_parameters():
        assert np.array_equal(p.data, saved[name])


def test_load_state_rejects_mismatched_checkpoints(model):
    arrays = state_dict(model)
    name = next(iter(arrays))
    with pytest.raises(DimensionError):
        load_state(model, {**arrays, name: np.zeros(7)})
    del arrays[name]
    with pytest.raises(FormatError, match=name):
        load_state(model, arrays)
