import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, OperandTypeError
from .models import ComplexTensor, active_tape

ELEMENTWISE_FNS = ("add", "hadamard", "conj", "abs2", "exp_j_theta", "relu_real", "tanh_real")


def as_tensor(value):
    if isinstance(value, ComplexTensor):
        return value
    return ComplexTensor(value)


def _make(data, inputs, backward_fn):
    tracked = any(t._tracked for t in inputs)
    out = ComplexTensor._wrap(data, tracked)
    if tracked:
        tape = active_tape()
        if tape is not None:
            tape.record(out, inputs, backward_fn)
    return out


def _require_real(t, fn):
    if t.is_complex:
        raise OperandTypeError(f"{fn} is defined for real tensors only, got a complex tensor")


def _swap(arr):
    return np.swapaxes(arr, -1, -2)


def complex_matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul shape mismatch: {list(a.shape)} x {list(b.shape)}"
        )
    a_data, b_data = a.data, b.data

    def backward(g):
        return g @ _swap(np.conj(b_data)), _swap(np.conj(a_data)) @ g

    return _make(a_data @ b_data, (a, b), backward)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def multiply(a, b):
    """Broadcasting complex product."""
    a, b = as_tensor(a), as_tensor(b)
    a_data, b_data = a.data, b.data

    def backward(g):
        return g * np.conj(b_data), g * np.conj(a_data)

    return _make(a_data * b_data, (a, b), backward)


def conj(a):
    a = as_tensor(a)
    return _make(np.conj(a.data), (a,), lambda g: (np.conj(g),))


def abs2(a):
    a = as_tensor(a)
    data = a.data

    def backward(g):
        return (2.0 * data * g,)

    return _make(np.real(data * np.conj(data)), (a,), backward)


def exp_j_theta(a):
    a = as_tensor(a)
    _require_real(a, "exp_j_theta")
    out = np.cos(a.data) + 1j * np.sin(a.data)

    def backward(g):
        return (np.real(g * (-1j) * np.conj(out)),)

    return _make(out, (a,), backward)


def relu_real(a):
    _require_real(a, "relu_real")
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def tanh_real(a):
    _require_real(a, "tanh_real")
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def elementwise(a, fn, b=None):
    """Entrywise kernel selected by name; binary kernels need equal shapes."""
    if fn not in ELEMENTWISE_FNS:
        raise ValueError(f"unknown elementwise fn {fn!r}; expected one of {ELEMENTWISE_FNS}")
    a = as_tensor(a)
    if fn in ("add", "hadamard"):
        if b is None:
            raise DimensionError(f"{fn} needs two operands")
        b = as_tensor(b)
        if a.shape != b.shape:
            raise DimensionError(f"{fn} shape mismatch: {list(a.shape)} vs {list(b.shape)}")
        return add(a, b) if fn == "add" else multiply(a, b)
    return {
        "conj": conj,
        "abs2": abs2,
        "exp_j_theta": exp_j_theta,
        "relu_real": relu_real,
        "tanh_real": tanh_real,
    }[fn](a)


def real(a):
    return _make(np.real(a.data).copy(), (a,), lambda g: (g,))


def imag(a):
    return _make(np.imag(a.data).copy(), (a,), lambda g: (1j * g,))


def combine(re, im):
    re, im = as_tensor(re), as_tensor(im)
    _require_real(re, "combine")
    _require_real(im, "combine")
    return _make(re.data + 1j * im.data, (re, im), lambda g: (np.real(g), np.imag(g)))


def power(a, exponent):
    _require_real(a, "power")
    data = a.data

    def backward(g):
        return (g * exponent * data ** (exponent - 1.0),)

    return _make(data ** exponent, (a,), backward)


def sum(a, axis=None, keepdims=False):
    shape = a.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return _make(np.sum(a.data, axis=axis, keepdims=keepdims), (a,), backward)


def mean(a, axis=None, keepdims=False):
    total = sum(a, axis=axis, keepdims=keepdims)
    count = a.size if axis is None else np.prod([a.shape[ax] for ax in np.atleast_1d(axis)])
    return multiply(total, 1.0 / count)


def reshape(a, shape):
    old = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None):
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def index(a, key):
    shape = a.shape
    dtype = a.data.dtype

    def backward(g):
        full = np.zeros(shape, dtype=np.result_type(dtype, g.dtype))
        np.add.at(full, key, g)
        return (full,)

    return _make(a.data[key], (a,), backward)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward)


def stack_real_imag(a):
    """(..., n) complex -> (..., 2n) real: real parts first, imaginary parts after."""
    return concat([real(a), imag(a)], axis=-1)


def log_softmax(a, axis=-1):
    _require_real(a, "log_softmax")
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    out = shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
    soft = np.exp(out)

    def backward(g):
        return (g - soft * np.sum(g, axis=axis, keepdims=True),)

    return _make(out, (a,), backward)


def conv2d(x, w, b=None):
    """Valid cross-correlation. x: (B, C, H, W), w: (O, C, k, k), b: (O,)."""
    _require_real(x, "conv2d")
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise DimensionError(f"conv2d shape mismatch: {list(x.shape)} * {list(w.shape)}")
    k = w.shape[-1]
    x_data, w_data = x.data, w.data
    patches = sliding_window_view(x_data, (k, k), axis=(2, 3))
    out = np.einsum("bchwpq,ocpq->bohw", patches, w_data, optimize=True)

    def backward(g):
        g_w = np.einsum("bchwpq,bohw->ocpq", patches, g, optimize=True)
        padded = np.pad(g, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        windows = sliding_window_view(padded, (k, k), axis=(2, 3))
        g_x = np.einsum("bouvpq,ocpq->bcuv", windows, w_data[:, :, ::-1, ::-1], optimize=True)
        return g_x, g_w

    y = _make(out, (x, w), backward)
    if b is not None:
        y = add(y, reshape(b, (1, -1, 1, 1)))
    return y


def pool2d(x, size=2, mode="max"):
    """Non-overlapping pooling; trailing rows/columns that do not fill a window are dropped."""
    _require_real(x, "pool2d")
    bsz, ch, h, w = x.shape
    ho, wo = h // size, w // size
    cropped = x.data[:, :, : ho * size, : wo * size]
    blocks = cropped.reshape(bsz, ch, ho, size, wo, size)
    if mode == "max":
        out = blocks.max(axis=(3, 5))
        mask = blocks == out[:, :, :, None, :, None]
        weights = mask / mask.sum(axis=(3, 5), keepdims=True)
    elif mode == "avg":
        out = blocks.mean(axis=(3, 5))
        weights = np.full(blocks.shape, 1.0 / (size * size))
    else:
        raise ValueError(f"unknown pooling mode {mode!r}")

    def backward(g):
        g_blocks = weights * g[:, :, :, None, :, None]
        full = np.zeros(x.shape)
        full[:, :, : ho * size, : wo * size] = g_blocks.reshape(bsz, ch, ho * size, wo * size)
        return (full,)

    return _make(out, (x,), backward)
