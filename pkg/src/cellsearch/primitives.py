"""The ten candidate operations of the search space and the softmax-relaxed
mixed edge that combines them.

Canonical operation order, used everywhere a logit vector is indexed:
D3, D5, L3, L5, S, SE, Pa, Pm, SK, Z.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .layers import BatchNorm2d, Conv2d, Linear, collect_buffers, collect_named
from .rng import RngState
from .tensor import ShapeError, Tensor

OP_KINDS = ("D3", "D5", "L3", "L5", "S", "SE", "Pa", "Pm", "SK", "Z")

DEFAULT_PRUNE_THRESHOLD = 1e-6
DEFAULT_SE_REDUCTION = 4


class PrimitiveOp:
    """Base for one candidate operation on an edge.

    Every kind maps (N, C_in, H, W) to (N, C_out, ceil(H/stride), ceil(W/stride)).
    """

    kind: str

    def __init__(self, in_channels: int, out_channels: int, stride: int):
        if stride not in (1, 2):
            raise ShapeError(f"stride must be 1 or 2, got {stride}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride

    def forward(self, x: Tensor, mode: str) -> Tensor:
        raise NotImplementedError

    def named_params(self):
        return []

    def named_buffers(self):
        return []


class DepthwiseSeparable(PrimitiveOp):
    """Depthwise k x k then pointwise 1 x 1, normalized and rectified."""

    def __init__(self, rng, in_channels, out_channels, stride, kernel):
        super().__init__(in_channels, out_channels, stride)
        self.kind = f"D{kernel}"
        self.dw = Conv2d(rng, in_channels, in_channels, kernel, stride=stride,
                         groups=in_channels, padding=kernel // 2)
        self.pw = Conv2d(rng, in_channels, out_channels, 1)
        self.bn = BatchNorm2d(out_channels)

    def forward(self, x, mode):
        return T.relu(self.bn.forward(self.pw.forward(self.dw.forward(x)), mode))

    def named_params(self):
        return collect_named("dw", self.dw) + collect_named("pw", self.pw) + collect_named("bn", self.bn)

    def named_buffers(self):
        return collect_buffers("bn", self.bn)


class DilatedConv(PrimitiveOp):
    """k x k convolution at dilation 2, normalized and rectified."""

    def __init__(self, rng, in_channels, out_channels, stride, kernel):
        super().__init__(in_channels, out_channels, stride)
        self.kind = f"L{kernel}"
        self.conv = Conv2d(rng, in_channels, out_channels, kernel, stride=stride,
                           dilation=2, padding=kernel - 1)
        self.bn = BatchNorm2d(out_channels)

    def forward(self, x, mode):
        return T.relu(self.bn.forward(self.conv.forward(x), mode))

    def named_params(self):
        return collect_named("conv", self.conv) + collect_named("bn", self.bn)

    def named_buffers(self):
        return collect_buffers("bn", self.bn)


class PointwiseConv(PrimitiveOp):
    """1 x 1 convolution for channel mixing and optional downsampling."""

    kind = "S"

    def __init__(self, rng, in_channels, out_channels, stride):
        super().__init__(in_channels, out_channels, stride)
        self.conv = Conv2d(rng, in_channels, out_channels, 1, stride=stride)
        self.bn = BatchNorm2d(out_channels)

    def forward(self, x, mode):
        return T.relu(self.bn.forward(self.conv.forward(x), mode))

    def named_params(self):
        return collect_named("conv", self.conv) + collect_named("bn", self.bn)

    def named_buffers(self):
        return collect_buffers("bn", self.bn)


class SqueezeExcite(PrimitiveOp):
    """Channel gate g = sigmoid(w2 . relu(w1 . GAP(x))); y = x * g per channel.

    The gate is a same-shape reweighting, so a stride-2 edge composes it with
    a 1 x 1 stride-2 projection.
    """

    kind = "SE"

    def __init__(self, rng, in_channels, out_channels, stride, reduction=DEFAULT_SE_REDUCTION):
        super().__init__(in_channels, out_channels, stride)
        if in_channels % reduction != 0:
            raise ShapeError(
                f"SE reduction {reduction} must divide channel count {in_channels}")
        self.reduction = reduction
        hidden = in_channels // reduction
        self.fc1 = Linear(rng, in_channels, hidden, bias=False)
        self.fc2 = Linear(rng, hidden, in_channels, bias=False)
        if stride == 2 or in_channels != out_channels:
            self.proj = Conv2d(rng, in_channels, out_channels, 1, stride=stride)
            self.proj_bn = BatchNorm2d(out_channels)
        else:
            self.proj = None
            self.proj_bn = None

    def forward(self, x, mode):
        g = T.sigmoid(self.fc2.forward(T.relu(self.fc1.forward(T.global_avg_pool(x)))))
        y = T.channel_scale(x, g)
        if self.proj is not None:
            y = self.proj_bn.forward(self.proj.forward(y), mode)
        return y

    def named_params(self):
        out = collect_named("fc1", self.fc1) + collect_named("fc2", self.fc2)
        if self.proj is not None:
            out += collect_named("proj", self.proj) + collect_named("proj_bn", self.proj_bn)
        return out

    def named_buffers(self):
        return collect_buffers("proj_bn", self.proj_bn) if self.proj is not None else []


class PoolOp(PrimitiveOp):
    """3 x 3 average or max pooling over spatial neighborhoods.

    Pooling preserves channels; a parameter-free pad/truncate guards the
    (misconfigured) case of a channel-changing edge.
    """

    def __init__(self, in_channels, out_channels, stride, kind):
        super().__init__(in_channels, out_channels, stride)
        self.kind = kind  # "Pa" or "Pm"

    def forward(self, x, mode):
        y = T.pool2d(x, "avg" if self.kind == "Pa" else "max", stride=self.stride)
        ci, co = self.in_channels, self.out_channels
        if ci == co:
            return y
        if co < ci:
            return T.slice_channels(y, co)
        pad = Tensor(np.zeros((y.data.shape[0], co - ci) + y.data.shape[2:], dtype=np.float32))
        return T.concat([y, pad], axis=1)

    def named_params(self):
        return []


class SkipOp(PrimitiveOp):
    """Identity at stride 1; at stride 2, a factorized reduction: two 1 x 1
    stride-2 convolutions (one on a one-pixel-shifted view), channel-concat, BN."""

    kind = "SK"

    def __init__(self, rng, in_channels, out_channels, stride):
        super().__init__(in_channels, out_channels, stride)
        if stride == 1 and in_channels == out_channels:
            self.conv_a = None
        else:
            half = out_channels // 2
            self.conv_a = Conv2d(rng, in_channels, half, 1, stride=stride)
            self.conv_b = Conv2d(rng, in_channels, out_channels - half, 1, stride=stride)
            self.bn = BatchNorm2d(out_channels)

    def forward(self, x, mode):
        if self.conv_a is None:
            return x
        a = self.conv_a.forward(x)
        b = self.conv_b.forward(T.shift_one_pixel(x))
        return self.bn.forward(T.concat([a, b], axis=1), mode)

    def named_params(self):
        if self.conv_a is None:
            return []
        return (collect_named("conv_a", self.conv_a) + collect_named("conv_b", self.conv_b)
                + collect_named("bn", self.bn))

    def named_buffers(self):
        return [] if self.conv_a is None else collect_buffers("bn", self.bn)


class ZeroOp(PrimitiveOp):
    """All-zero output of the edge's target shape; contributes no gradient."""

    kind = "Z"

    def forward(self, x, mode):
        n, _, h, w = x.data.shape
        ho = -(-h // self.stride)
        wo = -(-w // self.stride)
        return Tensor(np.zeros((n, self.out_channels, ho, wo), dtype=np.float32))

    def named_params(self):
        return []


def make_primitive(kind: str, rng: RngState, in_channels: int, out_channels: int,
                   stride: int, se_reduction: int = DEFAULT_SE_REDUCTION) -> PrimitiveOp:
    if kind == "D3":
        return DepthwiseSeparable(rng, in_channels, out_channels, stride, 3)
    if kind == "D5":
        return DepthwiseSeparable(rng, in_channels, out_channels, stride, 5)
    if kind == "L3":
        return DilatedConv(rng, in_channels, out_channels, stride, 3)
    if kind == "L5":
        return DilatedConv(rng, in_channels, out_channels, stride, 5)
    if kind == "S":
        return PointwiseConv(rng, in_channels, out_channels, stride)
    if kind == "SE":
        return SqueezeExcite(rng, in_channels, out_channels, stride, se_reduction)
    if kind in ("Pa", "Pm"):
        return PoolOp(in_channels, out_channels, stride, kind)
    if kind == "SK":
        return SkipOp(rng, in_channels, out_channels, stride)
    if kind == "Z":
        return ZeroOp(in_channels, out_channels, stride)
    raise ValueError(f"unknown operation kind {kind!r}")


class MixedEdge:
    """One searchable connection: 10 architecture logits plus the 10 candidate
    operations they mix. Forward is the softmax-weighted sum of candidate
    outputs; candidates whose selection weight falls below the prune threshold
    are skipped entirely (not executed)."""

    def __init__(self, rng: RngState, in_channels: int, out_channels: int, stride: int,
                 prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
                 se_reduction: int = DEFAULT_SE_REDUCTION):
        self.ops = [make_primitive(k, rng, in_channels, out_channels, stride, se_reduction)
                    for k in OP_KINDS]
        for op, kind in zip(self.ops, OP_KINDS):
            if op.kind != kind:
                raise ShapeError(f"op order mismatch: built {op.kind}, expected {kind}")
            if (op.in_channels, op.out_channels, op.stride) != (in_channels, out_channels, stride):
                raise ShapeError(
                    f"op {kind} disagrees on edge geometry "
                    f"({op.in_channels}->{op.out_channels}/s{op.stride} vs "
                    f"{in_channels}->{out_channels}/s{stride})")
        self.theta = Tensor(np.zeros(len(OP_KINDS), dtype=np.float32), requires_grad=True)
        self.prune_threshold = float(prune_threshold)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride

    def alpha(self) -> np.ndarray:
        z = self.theta.data - self.theta.data.max()
        e = np.exp(z)
        return e / e.sum()

    def forward(self, x: Tensor, mode: str) -> Tensor:
        alpha = T.softmax(self.theta, axis=0)
        weights = alpha.data
        acc = None
        for k, op in enumerate(self.ops):
            if weights[k] < self.prune_threshold:
                continue
            term = T.scale(op.forward(x, mode), T.gather_scalar(alpha, k))
            acc = term if acc is None else T.add(acc, term)
        return acc

    def named_params(self):
        out = []
        for op in self.ops:
            out.extend(collect_named(f"ops.{op.kind}", op))
        return out

    def named_buffers(self):
        out = []
        for op in self.ops:
            out.extend(collect_buffers(f"ops.{op.kind}", op))
        return out
