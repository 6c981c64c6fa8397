import math

import numpy as np

from ..errors import ConfigError
from ..tensorcore import ops, parameter

ACTIVATIONS = ("relu", "tanh")


def activate(x, kind):
    if kind == "relu":
        return ops.relu_real(x)
    if kind == "tanh":
        return ops.tanh_real(x)
    raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


class DenseLayer:
    """y = x W + b on the last axis."""

    def __init__(self, weight, bias, name="dense"):
        self.weight = parameter(weight, name=f"{name}.weight")
        self.bias = parameter(bias, name=f"{name}.bias")
        self.name = name

    @classmethod
    def init(cls, n_in, n_out, rng, name="dense"):
        weight = rng.standard_normal((n_in, n_out)) * math.sqrt(2.0 / n_in)
        return cls(weight, np.zeros(n_out), name)

    @property
    def shape(self):
        return self.weight.shape

    def __call__(self, x):
        return ops.add(ops.complex_matmul(x, self.weight), self.bias)

    def parameters(self):
        return [self.weight, self.bias]


class ConvLayer:
    def __init__(self, weight, bias, name="conv"):
        self.weight = parameter(weight, name=f"{name}.weight")
        self.bias = parameter(bias, name=f"{name}.bias")
        self.name = name

    @classmethod
    def init(cls, c_in, c_out, kernel, rng, name="conv"):
        fan_in = c_in * kernel * kernel
        weight = rng.standard_normal((c_out, c_in, kernel, kernel)) * math.sqrt(2.0 / fan_in)
        return cls(weight, np.zeros(c_out), name)

    @property
    def kernel(self):
        return self.weight.shape[-1]

    @property
    def out_channels(self):
        return self.weight.shape[0]

    def __call__(self, x):
        return ops.conv2d(x, self.weight, self.bias)

    def parameters(self):
        return [self.weight, self.bias]


def dense_stack(sizes, rng, prefix):
    return [DenseLayer.init(a, b, rng, name=f"{prefix}{i}") for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:]))]


def run_dense(layers, x, activation):
    """Hidden layers use `activation`; the last layer stays linear."""
    for i, layer in enumerate(layers):
        x = layer(x)
        if i < len(layers) - 1:
            x = activate(x, activation)
    return x
