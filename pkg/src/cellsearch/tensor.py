"""Reverse-mode automatic differentiation over dense float32 arrays.

Execution appends nodes to a global tape; `backward` replays the tape in
reverse append order exactly once, accumulating gradients additively into
every reachable leaf. All buffers are 32-bit floats; there is no implicit
broadcasting beyond what the ops below define.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .rng import RngState


class ShapeError(ValueError):
    """Raised when an operation rejects its input shapes."""


class GradTape:
    """Append-only record of executed operations.

    Node order is execution order; one backward pass visits each node
    exactly once, in reverse append order, then clears the tape.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def append(self, node: "_Node") -> None:
        self.nodes.append(node)

    def clear(self) -> None:
        self.nodes.clear()


class _Node:
    __slots__ = ("out", "parents", "bwd")

    def __init__(self, out: "Tensor", parents: tuple, bwd: Callable):
        self.out = out
        self.parents = parents
        self.bwd = bwd


_TAPE = GradTape()
_GRAD_ENABLED = True

# Optional probe used by finite-difference harnesses to detect inputs that
# sit too close to a ReLU kink or a max-pool tie for the FD step size.
_KINK_PROBE: Optional[dict] = None


@contextlib.contextmanager
def no_grad():
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


@contextlib.contextmanager
def kink_probe():
    """Record, during forward passes, how close inputs come to non-smooth points.

    Yields a dict with `relu_margin` (min |x| seen at any relu) and
    `pool_gap` (min max-vs-runner-up gap in any max-pool window).
    """
    global _KINK_PROBE
    prev = _KINK_PROBE
    _KINK_PROBE = {"relu_margin": np.inf, "pool_gap": np.inf}
    try:
        yield _KINK_PROBE
    finally:
        _KINK_PROBE = prev


def clear_tape() -> None:
    _TAPE.clear()


def tape_length() -> int:
    return len(_TAPE.nodes)


class Tensor:
    """Dense N-dimensional float32 value participating in the gradient tape."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)  # ascontiguousarray would promote 0-d to 1-d
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def sum(self) -> "Tensor":
        return tsum(self)

    def __add__(self, other):
        return add(self, other if isinstance(other, Tensor) else Tensor(np.full(self.shape, other)))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return mul_const(self, float(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _record(out: Tensor, parents: Sequence[Tensor], bwd: Callable) -> Tensor:
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        _TAPE.append(_Node(out, tuple(parents), bwd))
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if g is None or not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float32, copy=True)
    else:
        t.grad += g


def backward(loss: Tensor) -> None:
    """Backpropagate from a scalar loss through the recorded tape.

    Every reachable leaf with requires_grad ends up holding dLoss/dLeaf;
    gradients accumulate additively across multiple uses. The tape is
    cleared afterwards.
    """
    if loss.data.ndim != 0:
        raise ShapeError(f"backward expects a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        raise ValueError("loss is not reachable from any leaf with requires_grad")
    loss.grad = np.ones((), dtype=np.float32)
    for node in reversed(_TAPE.nodes):
        g = node.out.grad
        if g is None:
            continue
        for parent, pg in zip(node.parents, node.bwd(g)):
            _accum(parent, pg)
        if not isinstance(node.out, Tensor) or node.out is not loss:
            node.out.grad = None  # intermediates do not keep gradients
    _TAPE.clear()


# ---------------------------------------------------------------------------
# elementwise and reduction ops
# ---------------------------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = Tensor(a.data + b.data)
    return _record(out, (a, b), lambda g: (g, g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = Tensor(a.data * b.data)
    return _record(out, (a, b), lambda g: (g * b.data, g * a.data))


def mul_const(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * np.float32(c))
    return _record(out, (a,), lambda g: (g * np.float32(c),))


def tsum(a: Tensor) -> Tensor:
    out = Tensor(a.data.sum())
    return _record(out, (a,), lambda g: (np.broadcast_to(g, a.data.shape),))


def scale(x: Tensor, s: Tensor) -> Tensor:
    """Multiply a tensor by a scalar (0-d) tensor."""
    if s.data.ndim != 0:
        raise ShapeError(f"scale expects a 0-d scalar tensor, got shape {s.data.shape}")
    out = Tensor(x.data * s.data)

    def bwd(g):
        gx = g * s.data if x.requires_grad else None
        gs = np.float32((g.astype(np.float64) * x.data).sum()) if s.requires_grad else None
        return (gx, gs)

    return _record(out, (x, s), bwd)


def gather_scalar(v: Tensor, k: int) -> Tensor:
    """Extract element k of a 1-d tensor as a 0-d tensor."""
    if v.data.ndim != 1:
        raise ShapeError(f"gather_scalar expects a 1-d tensor, got shape {v.data.shape}")
    out = Tensor(v.data[k])

    def bwd(g):
        gv = np.zeros_like(v.data)
        gv[k] = g
        return (gv,)

    return _record(out, (v,), bwd)


def relu(x: Tensor) -> Tensor:
    if _KINK_PROBE is not None and x.data.size:
        m = float(np.abs(x.data).min())
        if m < _KINK_PROBE["relu_margin"]:
            _KINK_PROBE["relu_margin"] = m
    mask = x.data > 0  # subgradient at 0 is 0
    out = Tensor(np.where(mask, x.data, 0.0))
    return _record(out, (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s)
    return _record(out, (x,), lambda g: (g * s * (1.0 - s),))


def concat(parts: Sequence[Tensor], axis: int) -> Tensor:
    ref = parts[0].data.shape
    for i, p in enumerate(parts[1:], start=1):
        s = p.data.shape
        if len(s) != len(ref) or any(s[d] != ref[d] for d in range(len(ref)) if d != axis):
            raise ShapeError(f"concat part {i} disagrees on non-concat axes: {s} vs {ref}")
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        return tuple(
            np.ascontiguousarray(np.take(g, range(offsets[i], offsets[i + 1]), axis=axis))
            for i in range(len(parts))
        )

    return _record(out, tuple(parts), bwd)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(s)

    def bwd(g):
        dot = (g * s).sum(axis=axis, keepdims=True)
        return (s * (g - dot),)

    return _record(out, (x,), bwd)


# ---------------------------------------------------------------------------
# convolution and pooling
# ---------------------------------------------------------------------------


def _conv_out_size(size: int, k: int, stride: int, dilation: int, pad: int) -> int:
    eff = dilation * (k - 1) + 1
    return (size + 2 * pad - eff) // stride + 1


def _windows(xp: np.ndarray, kh: int, kw: int, stride: int, dilation: int,
             ho: int, wo: int) -> np.ndarray:
    """Strided (N, C, Ho, Wo, kh, kw) view over a padded NCHW array."""
    n, c, _, _ = xp.shape
    sn, sc, sh, sw = xp.strides
    return as_strided(
        xp,
        shape=(n, c, ho, wo, kh, kw),
        strides=(sn, sc, sh * stride, sw * stride, sh * dilation, sw * dilation),
        writeable=False,
    )


def conv2d(x: Tensor, w: Tensor, stride: int = 1, dilation: int = 1,
           groups: int = 1, padding: int = 0) -> Tensor:
    """2-d convolution, NCHW input, (C_out, C_in/groups, kh, kw) filter.

    Output spatial size follows the standard convolution arithmetic for the
    given stride/dilation/padding; gradients are defined w.r.t. x and w.
    """
    n, c, h, wdt = x.data.shape
    co, cg, kh, kw = w.data.shape
    if c % groups != 0:
        raise ShapeError(f"input channels {c} not divisible by groups {groups}")
    if co % groups != 0:
        raise ShapeError(f"output channels {co} not divisible by groups {groups}")
    if cg != c // groups:
        raise ShapeError(
            f"filter in-channel dim {cg} inconsistent with input channels {c} / groups {groups}")
    ho = _conv_out_size(h, kh, stride, dilation, padding)
    wo = _conv_out_size(wdt, kw, stride, dilation, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"convolution output spatial size {ho}x{wo} < 1 for input {h}x{wdt}")

    cog = co // groups

    def im2col(xd: np.ndarray) -> np.ndarray:
        xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        win = _windows(xp, kh, kw, stride, dilation, ho, wo)   # (N,C,Ho,Wo,kh,kw)
        win = win.reshape(n, groups, cg, ho, wo, kh, kw)
        # -> (G, N*Ho*Wo, Cg*kh*kw)
        return np.ascontiguousarray(win.transpose(1, 0, 3, 4, 2, 5, 6)).reshape(
            groups, n * ho * wo, cg * kh * kw)

    cols = im2col(x.data)
    wmat = w.data.reshape(groups, cog, cg * kh * kw)
    out_g = np.matmul(cols, wmat.transpose(0, 2, 1))           # (G, N*Ho*Wo, Cog)
    out = out_g.reshape(groups, n, ho, wo, cog).transpose(1, 0, 4, 2, 3)
    out = Tensor(np.ascontiguousarray(out.reshape(n, co, ho, wo)))

    def bwd(g):
        g_g = np.ascontiguousarray(
            g.reshape(n, groups, cog, ho, wo).transpose(1, 0, 3, 4, 2)
        ).reshape(groups, n * ho * wo, cog)
        gw = gx = None
        if w.requires_grad:
            cols_b = im2col(x.data)  # recomputed; saving it would hold too much memory
            gw = np.matmul(cols_b.transpose(0, 2, 1), g_g).transpose(0, 2, 1)
            gw = gw.reshape(co, cg, kh, kw).astype(np.float32)
        if x.requires_grad:
            dcols = np.matmul(g_g, wmat)                       # (G, N*Ho*Wo, Cg*kh*kw)
            dwin = dcols.reshape(groups, n, ho, wo, cg, kh, kw).transpose(1, 0, 4, 2, 3, 5, 6)
            dwin = dwin.reshape(n, c, ho, wo, kh, kw)
            hp, wp = h + 2 * padding, wdt + 2 * padding
            gxp = np.zeros((n, c, hp, wp), dtype=np.float32)
            for i in range(kh):
                hi = i * dilation
                for j in range(kw):
                    wj = j * dilation
                    gxp[:, :, hi:hi + (ho - 1) * stride + 1:stride,
                        wj:wj + (wo - 1) * stride + 1:stride] += dwin[:, :, :, :, i, j]
            gx = gxp[:, :, padding:padding + h, padding:padding + wdt]
            gx = np.ascontiguousarray(gx)
        return (gx, gw)

    return _record(out, (x, w), bwd)


def pool2d(x: Tensor, kind: str, stride: int = 1, window: int = 3, padding: int = 1) -> Tensor:
    """3x3 average or max pooling; avg excludes padded cells from the count,
    max routes gradient to the first argmax in row-major window order."""
    if window != 3:
        raise ShapeError(f"pooling window is fixed at 3, got {window}")
    if kind not in ("avg", "max"):
        raise ValueError(f"unknown pooling kind {kind!r}")
    n, c, h, wdt = x.data.shape
    ho = _conv_out_size(h, window, stride, 1, padding)
    wo = _conv_out_size(wdt, window, stride, 1, padding)
    if ho < 1 or wo < 1:
        raise ShapeError(f"pooling output spatial size {ho}x{wo} < 1 for input {h}x{wdt}")

    if kind == "avg":
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        win = _windows(xp, window, window, stride, 1, ho, wo)
        ones = np.pad(np.ones((1, 1, h, wdt), dtype=np.float32),
                      ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        counts = _windows(ones, window, window, stride, 1, ho, wo).sum(axis=(4, 5))
        out = Tensor((win.sum(axis=(4, 5)) / counts).astype(np.float32))

        def bwd_avg(g):
            contrib = g / counts
            gxp = np.zeros((n, c, h + 2 * padding, wdt + 2 * padding), dtype=np.float32)
            for i in range(window):
                for j in range(window):
                    gxp[:, :, i:i + (ho - 1) * stride + 1:stride,
                        j:j + (wo - 1) * stride + 1:stride] += contrib
            return (np.ascontiguousarray(gxp[:, :, padding:padding + h, padding:padding + wdt]),)

        return _record(out, (x,), bwd_avg)

    neg = np.finfo(np.float32).min
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)),
                constant_values=neg)
    win = _windows(xp, window, window, stride, 1, ho, wo)
    flat = win.reshape(n, c, ho, wo, window * window)
    arg = flat.argmax(axis=4)  # first index wins ties (row-major scan)
    out_vals = np.take_along_axis(flat, arg[..., None], axis=4)[..., 0]
    if _KINK_PROBE is not None:
        top2 = np.partition(flat, window * window - 2, axis=4)[..., -2:]
        finite = top2[..., 0] > neg / 2
        if finite.any():
            gap = float((top2[..., 1] - top2[..., 0])[finite].min())
            if gap < _KINK_PROBE["pool_gap"]:
                _KINK_PROBE["pool_gap"] = gap
    out = Tensor(out_vals)

    def bwd_max(g):
        gxp = np.zeros((n, c, h + 2 * padding, wdt + 2 * padding), dtype=np.float32)
        for t in range(window * window):
            i, j = divmod(t, window)
            m = (arg == t) * g
            gxp[:, :, i:i + (ho - 1) * stride + 1:stride,
                j:j + (wo - 1) * stride + 1:stride] += m
        return (np.ascontiguousarray(gxp[:, :, padding:padding + h, padding:padding + wdt]),)

    return _record(out, (x,), bwd_max)


def global_avg_pool(x: Tensor) -> Tensor:
    n, c, h, w = x.data.shape
    if h < 1 or w < 1:
        raise ShapeError(f"global_avg_pool needs spatial size >= 1, got {h}x{w}")
    out = Tensor(x.data.mean(axis=(2, 3)))
    inv = np.float32(1.0 / (h * w))

    def bwd(g):
        return (np.broadcast_to((g * inv)[:, :, None, None], x.data.shape).astype(np.float32),)

    return _record(out, (x,), bwd)


def channel_scale(x: Tensor, gate: Tensor) -> Tensor:
    """Per-channel reweighting: y[n,c,h,w] = x[n,c,h,w] * gate[n,c]."""
    n, c, _, _ = x.data.shape
    if gate.data.shape != (n, c):
        raise ShapeError(f"gate shape {gate.data.shape} does not match (N, C)=({n}, {c})")
    out = Tensor(x.data * gate.data[:, :, None, None])

    def bwd(g):
        gx = g * gate.data[:, :, None, None] if x.requires_grad else None
        gg = (g * x.data).sum(axis=(2, 3)) if gate.requires_grad else None
        return (gx, gg)

    return _record(out, (x, gate), bwd)


def slice_channels(x: Tensor, keep: int) -> Tensor:
    """Keep the first `keep` channels of an NCHW tensor."""
    if not 0 < keep <= x.data.shape[1]:
        raise ShapeError(f"cannot keep {keep} of {x.data.shape[1]} channels")
    out = Tensor(x.data[:, :keep])

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[:, :keep] = g
        return (gx,)

    return _record(out, (x,), bwd)


def shift_one_pixel(x: Tensor) -> Tensor:
    """Shift the image up-left by one pixel, zero-filling the far edges."""
    y = np.zeros_like(x.data)
    y[:, :, :-1, :-1] = x.data[:, :, 1:, 1:]
    out = Tensor(y)

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[:, :, 1:, 1:] = g[:, :, :-1, :-1]
        return (gx,)

    return _record(out, (x,), bwd)


# ---------------------------------------------------------------------------
# normalization, affine maps, embeddings
# ---------------------------------------------------------------------------


def batchnorm2d(x: Tensor, gamma: Tensor, beta: Tensor,
                running_mean: np.ndarray, running_var: np.ndarray,
                mode: str, eps: float = 1e-5, momentum: float = 0.1) -> Tensor:
    """Per-channel batch normalization.

    Train mode normalizes by biased batch statistics and updates the
    running buffers in place via EMA; eval mode uses the running buffers.
    """
    n, c, h, w = x.data.shape
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ShapeError(f"gamma/beta must have shape ({c},), got {gamma.data.shape}/{beta.data.shape}")
    if mode == "train":
        if n * h * w == 1:
            raise ShapeError("batchnorm train mode rejects a single-element batch (zero variance)")
        mean = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        running_mean *= (1.0 - momentum)
        running_mean += momentum * mean
        running_var *= (1.0 - momentum)
        running_var += momentum * var
    elif mode == "eval":
        mean = running_mean.astype(np.float32)
        var = running_var.astype(np.float32)
    else:
        raise ValueError(f"unknown batchnorm mode {mode!r}")

    inv_std = (1.0 / np.sqrt(var + eps)).astype(np.float32)
    xhat = (x.data - mean[None, :, None, None]) * inv_std[None, :, None, None]
    out = Tensor(xhat * gamma.data[None, :, None, None] + beta.data[None, :, None, None])
    m = n * h * w

    def bwd(g):
        gbeta = g.sum(axis=(0, 2, 3)) if beta.requires_grad else None
        ggamma = (g * xhat).sum(axis=(0, 2, 3)) if gamma.requires_grad else None
        gx = None
        if x.requires_grad:
            gxhat = g * gamma.data[None, :, None, None]
            if mode == "train":
                mean_g = gxhat.mean(axis=(0, 2, 3))
                mean_gx = (gxhat * xhat).mean(axis=(0, 2, 3))
                gx = inv_std[None, :, None, None] * (
                    gxhat - mean_g[None, :, None, None] - xhat * mean_gx[None, :, None, None])
            else:
                gx = gxhat * inv_std[None, :, None, None]
            gx = gx.astype(np.float32)
        return (gx, ggamma, gbeta)

    return _record(out, (x, gamma, beta), bwd)


def linear(x: Tensor, w: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Affine map y = x @ w + b with x (N, D), w (D, M), b (M,)."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ShapeError(f"linear shape mismatch: x {x.data.shape} @ w {w.data.shape}")
    y = x.data @ w.data
    if b is not None:
        if b.data.shape != (w.data.shape[1],):
            raise ShapeError(f"bias shape {b.data.shape} does not match output width {w.data.shape[1]}")
        y = y + b.data
    out = Tensor(y)

    if b is None:
        def bwd(g):
            gx = g @ w.data.T if x.requires_grad else None
            gw = x.data.T @ g if w.requires_grad else None
            return (gx, gw)
        return _record(out, (x, w), bwd)

    def bwd_b(g):
        gx = g @ w.data.T if x.requires_grad else None
        gw = x.data.T @ g if w.requires_grad else None
        gb = g.sum(axis=0) if b.requires_grad else None
        return (gx, gw, gb)

    return _record(out, (x, w, b), bwd_b)


def embedding_lookup(indices: np.ndarray, table: Tensor, field_name: str = "") -> Tensor:
    """Row lookup into a (V, d) table; rejects out-of-vocabulary indices."""
    idx = np.asarray(indices)
    if idx.ndim != 1:
        raise ShapeError(f"embedding indices must be 1-d, got shape {idx.shape}")
    v = table.data.shape[0]
    bad = np.nonzero((idx < 0) | (idx >= v))[0]
    if bad.size:
        row = int(bad[0])
        raise IndexError(
            f"index {int(idx[row])} out of vocabulary (size {v}) for field "
            f"{field_name or '<unnamed>'} at row {row}")
    out = Tensor(table.data[idx])

    def bwd(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return (gt,)

    return _record(out, (table,), bwd)


def dropout(x: Tensor, rate: float, mode: str, rng: Optional[RngState] = None) -> Tensor:
    """Inverted dropout: train zeroes with probability `rate` and rescales
    survivors by 1/(1-rate); eval is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        if mode not in ("train", "eval"):
            raise ValueError(f"unknown dropout mode {mode!r}")
        if rate == 0.0 and mode == "train":
            return mul_const(x, 1.0)
        return x
    if mode != "train":
        raise ValueError(f"unknown dropout mode {mode!r}")
    if rng is None:
        raise ValueError("train-mode dropout needs an RngState")
    keep = (rng.uniform(x.data.shape) >= rate).astype(np.float32)
    scl = np.float32(1.0 / (1.0 - rate))
    out = Tensor(x.data * keep * scl)
    return _record(out, (x,), lambda g: (g * keep * scl,))


def cross_entropy_label_smoothed(logits: Tensor, targets: np.ndarray, smoothing: float) -> Tensor:
    """Mean batch cross entropy against a label-smoothed target distribution:
    (1 - smoothing) on the true class, smoothing/(C-1) spread over the rest."""
    if not 0.0 <= smoothing < 1.0:
        raise ValueError(f"smoothing must be in [0, 1), got {smoothing}")
    n, c = logits.data.shape
    if c < 2:
        raise ShapeError(f"need at least 2 classes, got {c}")
    t = np.asarray(targets, dtype=np.int64)
    if t.shape != (n,):
        raise ShapeError(f"targets shape {t.shape} does not match batch size {n}")
    bad = np.nonzero((t < 0) | (t >= c))[0]
    if bad.size:
        raise IndexError(f"target index {int(t[bad[0]])} >= num_classes {c} at row {int(bad[0])}")

    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    q = np.full((n, c), smoothing / (c - 1), dtype=np.float32)
    q[np.arange(n), t] = 1.0 - smoothing
    loss = -(q * logp).sum(axis=1).mean()
    out = Tensor(np.float32(loss))
    p = np.exp(logp)

    def bwd(g):
        return ((p - q) * (g / np.float32(n)),)

    return _record(out, (logits,), bwd)
