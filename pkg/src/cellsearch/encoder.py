"""The searchable cell, cell stacking, and the image embedding head."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .layers import BatchNorm2d, Conv2d, Linear, collect_buffers, collect_named
from .primitives import DEFAULT_PRUNE_THRESHOLD, DEFAULT_SE_REDUCTION, MixedEdge
from .rng import RngState
from .tensor import ShapeError, Tensor

IMAGE_EMBED_DIM = 256


class Cell:
    """Two-node searchable block with three mixed edges.

    node 1 takes the cell input; node 2 sums one edge from the input and one
    from node 1; their channel concatenation is projected back down to C by a
    1 x 1 convolution with BN (no activation, so a cell can sit near identity).
    """

    def __init__(self, rng: RngState, channels: int, stride: int = 1,
                 prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
                 se_reduction: int = DEFAULT_SE_REDUCTION):
        c = channels
        self.edge_n1 = MixedEdge(rng.split("n1"), c, c, stride, prune_threshold, se_reduction)
        self.edge_n2a = MixedEdge(rng.split("n2a"), c, c, stride, prune_threshold, se_reduction)
        self.edge_n2b = MixedEdge(rng.split("n2b"), c, c, 1, prune_threshold, se_reduction)
        self.project = Conv2d(rng.split("project"), 2 * c, c, 1)
        self.project_bn = BatchNorm2d(c)
        self.channels = c
        self.stride = stride

    EDGE_NAMES = ("n1", "n2a", "n2b")

    def edges(self):
        return [("n1", self.edge_n1), ("n2a", self.edge_n2a), ("n2b", self.edge_n2b)]

    def forward(self, x: Tensor, mode: str) -> Tensor:
        z1 = self.edge_n1.forward(x, mode)
        z2 = T.add(self.edge_n2a.forward(x, mode), self.edge_n2b.forward(z1, mode))
        zt = T.concat([z1, z2], axis=1)
        return self.project_bn.forward(self.project.forward(zt), mode)

    def named_params(self):
        out = []
        for name, edge in self.edges():
            out.extend(collect_named(name, edge))
        out.extend(collect_named("project", self.project))
        out.extend(collect_named("project_bn", self.project_bn))
        return out

    def named_buffers(self):
        out = []
        for name, edge in self.edges():
            out.extend(collect_buffers(name, edge))
        out.extend(collect_buffers("project_bn", self.project_bn))
        return out

    def arch_params(self):
        return [(name, edge.theta) for name, edge in self.edges()]


class ImageEncoder:
    """Stem, stacked searchable cells, and a global-pool + linear embedding."""

    def __init__(self, rng: RngState, in_channels: int = 1, channels: int = 16,
                 num_cells: int = 3, input_hw: tuple = (32, 32),
                 cell_strides=None,
                 prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
                 se_reduction: int = DEFAULT_SE_REDUCTION):
        if cell_strides is None:
            cell_strides = [1] * num_cells
        if len(cell_strides) != num_cells:
            raise ShapeError(f"{len(cell_strides)} strides given for {num_cells} cells")
        self.stem = Conv2d(rng.split("stem"), in_channels, channels, 3, padding=1)
        self.stem_bn = BatchNorm2d(channels)
        self.cells = [Cell(rng.split(f"cell{i}"), channels, s, prune_threshold, se_reduction)
                      for i, s in enumerate(cell_strides)]
        self.embed = Linear(rng.split("embed"), channels, IMAGE_EMBED_DIM)
        self.in_channels = in_channels
        self.channels = channels
        self.input_hw = tuple(input_hw)
        self.cell_strides = list(cell_strides)

    def forward(self, images: Tensor, mode: str) -> Tensor:
        n, c, h, w = images.data.shape
        if (h, w) != self.input_hw or c != self.in_channels:
            raise ShapeError(
                f"expected input {self.in_channels}x{self.input_hw[0]}x{self.input_hw[1]}, "
                f"got {c}x{h}x{w}")
        y = T.relu(self.stem_bn.forward(self.stem.forward(images), mode))
        for cell in self.cells:
            y = cell.forward(y, mode)
        return self.embed.forward(T.global_avg_pool(y))

    def named_params(self):
        out = collect_named("stem", self.stem) + collect_named("stem_bn", self.stem_bn)
        for i, cell in enumerate(self.cells):
            out.extend(collect_named(f"cells.{i}", cell))
        out.extend(collect_named("embed", self.embed))
        return out

    def named_buffers(self):
        out = collect_buffers("stem_bn", self.stem_bn)
        for i, cell in enumerate(self.cells):
            out.extend(collect_buffers(f"cells.{i}", cell))
        return out

    def arch_params(self):
        """Ordered theta vectors: cell index, then edge (n1, n2a, n2b)."""
        out = []
        for i, cell in enumerate(self.cells):
            for name, theta in cell.arch_params():
                out.append((f"cells.{i}.{name}.theta", theta))
        return out


def collect_arch_params(enc: ImageEncoder):
    return enc.arch_params()


def collect_weight_params(enc: ImageEncoder):
    """All trainable tensors that are not architecture logits."""
    return enc.named_params()


def param_count(named) -> int:
    return int(sum(int(np.prod(p.data.shape)) for _, p in named))
