"""Concatenation fusion of image and metadata embeddings, plus the classifier."""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import tensor as T
from .encoder import IMAGE_EMBED_DIM, ImageEncoder
from .layers import Linear, collect_buffers, collect_named
from .metadata import META_EMBED_DIM, MetadataEncoder, MetadataSchema
from .rng import RngState
from .tensor import ShapeError, Tensor

DEFAULT_DROPOUT_RATE = 0.2
DEFAULT_LABEL_SMOOTHING = 0.1


class FusionHead:
    """Dropout over the fused feature vector, then a single linear classifier.

    Input width is 512 with both modalities, 256 in image-only ablation mode.
    Softmax is applied only at evaluation/reporting; training consumes logits.
    """

    def __init__(self, rng: RngState, num_classes: int, with_metadata: bool = True,
                 dropout_rate: float = DEFAULT_DROPOUT_RATE):
        self.with_metadata = with_metadata
        self.in_dim = IMAGE_EMBED_DIM + (META_EMBED_DIM if with_metadata else 0)
        self.classifier = Linear(rng.split("classifier"), self.in_dim, num_classes)
        self.dropout_rate = float(dropout_rate)
        self.num_classes = num_classes

    def forward(self, x_img: Tensor, x_meta: Optional[Tensor], mode: str,
                rng: Optional[RngState] = None) -> Tensor:
        if x_img.data.shape[1] != IMAGE_EMBED_DIM:
            raise ShapeError(f"image embedding width {x_img.data.shape[1]} != {IMAGE_EMBED_DIM}")
        if self.with_metadata:
            if x_meta is None:
                raise ShapeError("fusion head built with metadata but none was given")
            if x_meta.data.shape[1] != META_EMBED_DIM:
                raise ShapeError(
                    f"metadata embedding width {x_meta.data.shape[1]} != {META_EMBED_DIM}")
            fused = T.concat([x_img, x_meta], axis=1)
        else:
            if x_meta is not None:
                raise ShapeError("fusion head built image-only but metadata was given")
            fused = x_img
        fused = T.dropout(fused, self.dropout_rate, mode, rng)
        return self.classifier.forward(fused)

    def named_params(self):
        return collect_named("classifier", self.classifier)

    def named_buffers(self):
        return []


def training_loss(logits: Tensor, targets: np.ndarray,
                  smoothing: float = DEFAULT_LABEL_SMOOTHING) -> Tensor:
    """Mean label-smoothed cross entropy over the batch."""
    return T.cross_entropy_label_smoothed(logits, targets, smoothing)


class MultimodalClassifier:
    """Image encoder + optional metadata encoder + fusion head, end to end."""

    def __init__(self, rng: RngState, image_encoder: ImageEncoder,
                 schema: Optional[MetadataSchema], num_classes: int,
                 dropout_rate: float = DEFAULT_DROPOUT_RATE, ffn_hidden: int = 256):
        self.image_encoder = image_encoder
        self.metadata_encoder = (MetadataEncoder(rng.split("meta"), schema, ffn_hidden)
                                 if schema is not None else None)
        self.head = FusionHead(rng.split("head"), num_classes,
                               with_metadata=schema is not None, dropout_rate=dropout_rate)
        self.num_classes = num_classes

    def forward(self, images: Tensor, meta_rows: Optional[np.ndarray], mode: str,
                rng: Optional[RngState] = None) -> Tensor:
        x_img = self.image_encoder.forward(images, mode)
        x_meta = None
        if self.metadata_encoder is not None:
            x_meta = self.metadata_encoder.forward(meta_rows)
        return self.head.forward(x_img, x_meta, mode, rng)

    def named_params(self):
        """All trainable weights (architecture logits excluded), stable order."""
        out = collect_named("image", self.image_encoder)
        if self.metadata_encoder is not None:
            out.extend(collect_named("meta", self.metadata_encoder))
        out.extend(collect_named("head", self.head))
        return out

    def named_buffers(self):
        out = collect_buffers("image", self.image_encoder)
        if self.metadata_encoder is not None:
            out.extend(collect_buffers("meta", self.metadata_encoder))
        out.extend(collect_buffers("head", self.head))
        return out

    def arch_params(self):
        return [(f"image.{n}", t) for n, t in self.image_encoder.arch_params()]

    def mixed_edges(self):
        for i, cell in enumerate(self.image_encoder.cells):
            for name, edge in cell.edges():
                yield f"cells.{i}.{name}", edge
