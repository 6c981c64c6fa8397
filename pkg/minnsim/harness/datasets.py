import csv
import gzip
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, FormatError, ParseError, TruncatedFileError

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
MISSING = ("", "?", "na", "nan", "null")
VARIANCE_FLOOR = 1e-12

# name -> (samples, features, informative features, class separation)
SYNTHETIC_SHAPES = {
    "wbcd": (569, 30, 10, 1.2),
    "parkinsons": (195, 22, 8, 1.0),
    "mnist_binary": (1000, 60, 20, 0.8),
    "secom": (1567, 590, 5, 0.25),
}


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    n_classes: int = None
    name: str = "dataset"
    split: str = "train"
    input_shape: tuple = None
    dropped: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if self.x.shape[0] != self.y.shape[0]:
            raise DataError(f"{self.x.shape[0]} feature rows for {self.y.shape[0]} labels")
        if not np.all(np.isfinite(self.x)):
            raise DataError(f"{self.name}: features contain NaN or Inf")
        if self.n_classes is None:
            self.n_classes = int(self.y.max()) + 1 if self.y.size else 0
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise DataError(f"{self.name}: labels must lie in [0, {self.n_classes})")
        if self.input_shape is None:
            self.input_shape = self.x.shape[1:]
        self.input_shape = tuple(self.input_shape)

    def __len__(self):
        return self.y.shape[0]

    @property
    def n_features(self):
        return int(np.prod(self.x.shape[1:]))

    def take(self, idx, split=None):
        return Dataset(self.x[idx], self.y[idx], self.n_classes, self.name, split or self.split,
                       self.input_shape, meta=dict(self.meta))

    def inputs(self, shape=None):
        shape = tuple(shape or self.input_shape)
        return Dataset(self.x.reshape(len(self), *shape), self.y, self.n_classes, self.name, self.split,
                       shape, self.dropped, dict(self.meta))

    def flat(self):
        return self.inputs((self.n_features,))

    def train_test(self, test_fraction, rng):
        if not 0.0 < test_fraction < 1.0:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
        order = rng.permutation(len(self))
        n_test = max(1, int(round(test_fraction * len(self))))
        return self.take(order[n_test:], "train"), self.take(order[:n_test], "test")


def standardize(train, *others):
    """Zero mean, unit variance per column from `train` statistics, applied to every split."""
    flat = train.x.reshape(len(train), -1)
    mean = flat.mean(axis=0)
    std = np.sqrt(np.maximum(flat.var(axis=0), VARIANCE_FLOOR))
    out = []
    for ds in (train, *others):
        x = (ds.x.reshape(len(ds), -1) - mean) / std
        # constant columns collapse to exactly zero
        x[:, flat.var(axis=0) < VARIANCE_FLOOR] = 0.0
        out.append(Dataset(x.reshape(ds.x.shape), ds.y, ds.n_classes, ds.name, ds.split, ds.input_shape,
                           ds.dropped, dict(ds.meta)))
    return out if others else out[0]


def minmax_scale(train, *others):
    """Map every column into [0, 1] with `train` minima and ranges (amplitude-encoded features)."""
    flat = train.x.reshape(len(train), -1)
    low = flat.min(axis=0)
    span = flat.max(axis=0) - low
    span[span < VARIANCE_FLOOR] = 1.0
    out = [
        Dataset(((ds.x.reshape(len(ds), -1) - low) / span).reshape(ds.x.shape), ds.y, ds.n_classes, ds.name,
                ds.split, ds.input_shape, ds.dropped, dict(ds.meta))
        for ds in (train, *others)
    ]
    return out if others else out[0]


def _open(path):
    return gzip.open(path, "rb") if str(path).endswith(".gz") else open(path, "rb")


def _read_idx(path, magic, ndim):
    with _open(path) as handle:
        blob = handle.read()
    if len(blob) < 4 + 4 * ndim:
        raise TruncatedFileError(f"{path}: header needs {4 + 4 * ndim} bytes, file has {len(blob)}")
    (observed,) = struct.unpack(">I", blob[:4])
    if observed != magic:
        raise FormatError(f"{path}: bad IDX magic 0x{observed:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", blob[4:4 + 4 * ndim])
    body = blob[4 + 4 * ndim:]
    expected = int(np.prod(dims))
    if len(body) < expected:
        raise TruncatedFileError(f"{path}: expected {expected} data bytes, found {len(body)}")
    return np.frombuffer(body[:expected], dtype=np.uint8).reshape(dims)


def stride_indices(n_total, k):
    """k indices spread by uniform stride over range(n_total)."""
    if not 1 <= k <= n_total:
        raise ConfigError(f"cannot sub-sample {k} of {n_total} features")
    return np.floor(np.arange(k) * n_total / k).astype(np.int64)


def load_mnist_idx(images_path, labels_path, subsample=None, limit=None, digits=None, split="train"):
    """IDX image/label files -> Dataset with pixels in [0, 1].

    subsample keeps k pixels by uniform stride; digits keeps (and relabels) a subset of classes.
    """
    images = _read_idx(images_path, IMAGES_MAGIC, 3)
    labels = _read_idx(labels_path, LABELS_MAGIC, 1)
    if images.shape[0] != labels.shape[0]:
        raise DataError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    rows, cols = images.shape[1:]
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    y = labels.astype(np.int64)
    n_classes = 10
    if digits:
        keep = np.isin(y, digits)
        x, y = x[keep], np.searchsorted(np.sort(digits), y[keep])
        n_classes = len(digits)
    if limit is not None:
        x, y = x[:limit], y[:limit]
    shape = (rows, cols)
    if subsample is not None:
        x = x[:, stride_indices(x.shape[1], subsample)]
        shape = (subsample,)
    logger.info("loaded %d MNIST %s samples (%d features)", x.shape[0], split, x.shape[1])
    return Dataset(x, y, n_classes, "mnist", split, shape)


def load_csv_dataset(path, label_column, standardized=True, split="train"):
    """Headed CSV -> Dataset. Rows with missing cells are dropped; label values map to class indices."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        if label_column not in header:
            raise ConfigError(f"{path}: no label column {label_column!r} in header {header}")
        label_at = header.index(label_column)
        features, labels, dropped = [], [], 0
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            cells = [c.strip() for c in row]
            if len(cells) < len(header) or any(c.lower() in MISSING for c in cells[:len(header)]):
                dropped += 1
                continue
            values = []
            for col, (name, cell) in enumerate(zip(header, cells)):
                if col == label_at:
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}: non-numeric cell {cell!r} at row {row_no}, column {name!r}") from None
            features.append(values)
            labels.append(cells[label_at])
    if dropped:
        logger.warning("%s: dropped %d rows with missing cells", path, dropped)
    if not features:
        raise DataError(f"{path}: no complete rows")

    classes = sorted(set(labels), key=_label_key)
    index = {c: i for i, c in enumerate(classes)}
    ds = Dataset(np.array(features), [index[c] for c in labels], len(classes), str(path), split, dropped=dropped)
    ds.meta["classes"] = classes
    return standardize(ds) if standardized else ds


def _label_key(value):
    try:
        return (0, float(value), value)
    except ValueError:
        return (1, 0.0, value)


def synthetic_dataset(name, rng, n_samples=None):
    """Binary Gaussian-mixture surrogate with the sample/feature counts of a named tabular set."""
    if name not in SYNTHETIC_SHAPES:
        raise ConfigError(f"unknown synthetic dataset {name!r}; expected one of {sorted(SYNTHETIC_SHAPES)}")
    n, d, informative, separation = SYNTHETIC_SHAPES[name]
    n = n_samples or n
    y = rng.integers(0, 2, n)
    basis, _ = np.linalg.qr(rng.standard_normal((d, informative)))
    direction = rng.standard_normal(informative)
    direction *= separation / np.linalg.norm(direction)
    latent = rng.standard_normal((n, informative)) + np.where(y[:, None] == 1, direction, -direction)
    x = latent @ basis.T + 0.5 * rng.standard_normal((n, d))
    return Dataset(x, y, 2, name)
