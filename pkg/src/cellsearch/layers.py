"""Parameterized building blocks shared by the encoders and heads."""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import tensor as T
from .rng import RngState
from .tensor import Tensor


def fan_in_uniform(rng: RngState, shape: tuple, fan_in: int) -> Tensor:
    """Trainable tensor drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    data = (rng.uniform(shape) * 2.0 - 1.0) * bound
    return Tensor(data, requires_grad=True)


class BatchNorm2d:
    """Per-channel affine normalization with running statistics buffers."""

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.1):
        self.gamma = Tensor(np.ones(channels, dtype=np.float32), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=np.float32), requires_grad=True)
        self.running_mean = np.zeros(channels, dtype=np.float32)
        self.running_var = np.ones(channels, dtype=np.float32)
        self.eps = eps
        self.momentum = momentum

    def forward(self, x: Tensor, mode: str) -> Tensor:
        return T.batchnorm2d(x, self.gamma, self.beta, self.running_mean,
                             self.running_var, mode, self.eps, self.momentum)

    def named_params(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def named_buffers(self):
        return [("running_mean", self.running_mean), ("running_var", self.running_var)]


class Conv2d:
    """Bias-free convolution weight holder (normalization supplies the shift)."""

    def __init__(self, rng: RngState, in_channels: int, out_channels: int, kernel: int,
                 stride: int = 1, dilation: int = 1, groups: int = 1, padding: int = 0):
        cg = in_channels // groups
        self.w = fan_in_uniform(rng, (out_channels, cg, kernel, kernel), cg * kernel * kernel)
        self.stride = stride
        self.dilation = dilation
        self.groups = groups
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return T.conv2d(x, self.w, stride=self.stride, dilation=self.dilation,
                        groups=self.groups, padding=self.padding)

    def named_params(self):
        return [("w", self.w)]

    def named_buffers(self):
        return []


class Linear:
    def __init__(self, rng: RngState, in_dim: int, out_dim: int, bias: bool = True):
        self.w = fan_in_uniform(rng, (in_dim, out_dim), in_dim)
        self.b = Tensor(np.zeros(out_dim, dtype=np.float32), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return T.linear(x, self.w, self.b)

    def named_params(self):
        out = [("w", self.w)]
        if self.b is not None:
            out.append(("b", self.b))
        return out

    def named_buffers(self):
        return []


def collect_named(prefix: str, module) -> list:
    """Prefix a module's named_params with a dotted path."""
    return [(f"{prefix}.{n}", p) for n, p in module.named_params()]


def collect_buffers(prefix: str, module) -> list:
    return [(f"{prefix}.{n}", b) for n, b in module.named_buffers()]
