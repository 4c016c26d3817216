"""Differentiable architecture search over a ten-primitive cell, with
categorical-metadata fusion and alternating bi-level training."""

from .rng import RngState, mix64
from .tensor import Tensor, ShapeError, backward, no_grad

__all__ = ["RngState", "mix64", "Tensor", "ShapeError", "backward", "no_grad"]
__version__ = "0.1.0"
