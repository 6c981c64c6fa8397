import threading

import numpy as np

from ..errors import ContractError

_local = threading.local()


def _tape_stack():
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape():
    """Return the innermost tape of this thread, or None when recording is off."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class no_grad:
    """Suspend recording on this thread (used for evaluation and finite differences)."""

    def __enter__(self):
        _tape_stack().append(None)
        return self

    def __exit__(self, *exc):
        _tape_stack().pop()
        return False


def unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class ComplexTensor:
    """Shaped array of complex (or real) doubles that can take part in a GradTape.

    Leaves created with requires_grad=True must be real; complex trainable values
    are built from a ComplexParameter (a real/imaginary pair of real leaves).
    """

    __array_priority__ = 1000

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.array(data)
        if np.iscomplexobj(arr):
            arr = arr.astype(np.complex128)
        else:
            arr = arr.astype(np.float64)
        if requires_grad and np.iscomplexobj(arr):
            raise ContractError(
                "complex leaves cannot require grad; use ComplexParameter"
            )
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._tracked = self.requires_grad

    @classmethod
    def _wrap(cls, data, tracked):
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out.name = None
        out._tracked = tracked
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def numpy(self):
        return self.data.copy()

    def item(self):
        return self.data.item()

    def detach(self):
        return ComplexTensor._wrap(self.data, False)

    def zero_grad(self):
        self.grad = None

    def __len__(self):
        return self.data.shape[0]

    def __repr__(self):
        kind = "complex" if self.is_complex else "real"
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"ComplexTensor({kind}, shape={list(self.shape)}{flag})"

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.multiply(self, other)

    def __rmul__(self, other):
        return ops.multiply(other, self)

    def __truediv__(self, other):
        if isinstance(other, ComplexTensor):
            return ops.multiply(self, ops.power(other, -1.0))
        return ops.multiply(self, 1.0 / other)

    def __neg__(self):
        return ops.multiply(self, -1.0)

    def __matmul__(self, other):
        return ops.complex_matmul(self, other)

    def __getitem__(self, key):
        return ops.index(self, key)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return ops.mean(self, axis=axis, keepdims=keepdims)

    @property
    def real(self):
        return ops.real(self)

    @property
    def imag(self):
        return ops.imag(self)


def parameter(data, name=None):
    return ComplexTensor(np.asarray(data, dtype=np.float64), requires_grad=True, name=name)


class ComplexParameter:
    """Trainable complex array stored as two real leaves."""

    def __init__(self, values, name=None):
        values = np.asarray(values, dtype=np.complex128)
        self.name = name
        self.re = parameter(values.real, name=f"{name}.re" if name else None)
        self.im = parameter(values.imag, name=f"{name}.im" if name else None)

    def tensor(self):
        return ops.combine(self.re, self.im)

    def parameters(self):
        return [self.re, self.im]

    @property
    def value(self):
        return self.re.data + 1j * self.im.data


class GradTape:
    """Define-by-run record of executed operations.

    Each record is (output, inputs, backward_fn); backward_fn maps the adjoint of
    the output to one adjoint per input (None where nothing flows). Adjoints of
    complex values are dL/dRe + j*dL/dIm, so real parameters receive the real
    part of whatever reaches them.
    """

    def __init__(self):
        self.records = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack().pop()
        return False

    def __len__(self):
        return len(self.records)

    def record(self, output, inputs, backward_fn):
        self.records.append((output, inputs, backward_fn))

    def clear(self):
        self.records = []

    def backward(self, loss):
        if not self.records:
            raise ContractError("backward called on an empty tape")
        if loss.is_complex:
            raise ContractError("backward needs a real scalar loss, got a complex tensor")
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {list(loss.shape)}")

        grads = {id(loss): np.ones_like(loss.data)}
        leaves = {}
        for output, inputs, backward_fn in reversed(self.records):
            g_out = grads.pop(id(output), None)
            if g_out is None:
                continue
            for tensor, g_in in zip(inputs, backward_fn(g_out)):
                if g_in is None or not tensor._tracked:
                    continue
                if not tensor.is_complex:
                    g_in = np.real(g_in)
                g_in = unbroadcast(np.asarray(g_in), tensor.shape)
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + g_in
                else:
                    grads[key] = g_in
                if tensor.requires_grad:
                    leaves[key] = tensor

        for key, tensor in leaves.items():
            g = grads.get(key)
            if g is None:
                continue
            g = np.array(g, dtype=np.float64).reshape(tensor.shape)
            tensor.grad = g if tensor.grad is None else tensor.grad + g
        self.clear()


from . import ops  # noqa: E402
