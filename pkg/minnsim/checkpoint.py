"""Versioned binary checkpoints.

Layout (all integers little-endian):
    magic      8 bytes  b"MINNCKPT"
    version    uint16
    count      uint32   number of arrays
    per array: uint16 name length, UTF-8 name, uint8 kind (0 real, 1 complex),
               uint8 ndim, ndim x uint32 dims
    meta       uint32 length + UTF-8 JSON (may be empty)
    payload    float64 '<f8' values of every array in header order;
               complex arrays are stored as interleaved (re, im) pairs
"""
import json
import struct

import numpy as np

from .errors import DimensionError, FormatError, TruncatedFileError

MAGIC = b"MINNCKPT"
VERSION = 1


def save_checkpoint(path, arrays, metadata=None):
    header = [MAGIC, struct.pack("<HI", VERSION, len(arrays))]
    payload = []
    for name, value in arrays.items():
        value = np.asarray(value)
        is_complex = np.iscomplexobj(value)
        encoded = name.encode("utf-8")
        header.append(struct.pack("<H", len(encoded)) + encoded)
        header.append(struct.pack("<BB", int(is_complex), value.ndim))
        header.append(struct.pack(f"<{value.ndim}I", *value.shape))
        if is_complex:
            flat = np.stack([value.real.reshape(-1), value.imag.reshape(-1)], axis=1)
        else:
            flat = value.reshape(-1)
        payload.append(np.ascontiguousarray(flat, dtype="<f8").tobytes())
    meta = json.dumps(metadata or {}, sort_keys=True).encode("utf-8")
    header.append(struct.pack("<I", len(meta)) + meta)
    with open(path, "wb") as handle:
        handle.write(b"".join(header))
        handle.write(b"".join(payload))


class _Reader:
    def __init__(self, blob):
        self.blob = blob
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.blob):
            raise TruncatedFileError(
                f"checkpoint truncated: needed {n} bytes at offset {self.pos}, file has {len(self.blob)}"
            )
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path):
    with open(path, "rb") as handle:
        reader = _Reader(handle.read())
    magic = reader.take(len(MAGIC))
    if magic != MAGIC:
        raise FormatError(f"not a minnsim checkpoint: magic {magic!r}")
    version, count = reader.unpack("<HI")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version} (this build reads {VERSION})")
    entries = []
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        is_complex, ndim = reader.unpack("<BB")
        shape = reader.unpack(f"<{ndim}I") if ndim else ()
        entries.append((name, bool(is_complex), tuple(shape)))
    (meta_len,) = reader.unpack("<I")
    metadata = json.loads(reader.take(meta_len).decode("utf-8")) if meta_len else {}

    arrays = {}
    for name, is_complex, shape in entries:
        n = int(np.prod(shape)) * (2 if is_complex else 1)
        values = np.frombuffer(reader.take(8 * n), dtype="<f8").astype(np.float64)
        if is_complex:
            values = values.reshape(-1, 2)
            values = values[:, 0] + 1j * values[:, 1]
        arrays[name] = values.reshape(shape)
    return arrays, metadata


def state_dict(model):
    return {name: p.data.copy() for name, p in model.named_parameters()}


def load_state(model, arrays):
    for name, p in model.named_parameters():
        if name not in arrays:
            raise FormatError(f"checkpoint has no entry for parameter {name!r}")
        value = np.asarray(arrays[name], dtype=np.float64)
        if value.shape != p.shape:
            raise DimensionError(f"{name}: checkpoint shape {list(value.shape)} vs model {list(p.shape)}")
        p.data[...] = value
