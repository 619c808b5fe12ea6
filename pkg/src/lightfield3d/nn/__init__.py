"""Minimal reverse-mode differentiation engine with the layers the reconstruction model needs."""

from .checkpoint import load_checkpoint, save_checkpoint
from .fourier import dft2
from .functional import (
    add,
    add_scalars,
    align,
    avgpool2,
    concat_channels,
    conv2d,
    dc_loss,
    fft_loss,
    leaky_relu,
    mse_loss,
    project,
    relu,
    reshape,
    scale,
    stack,
    upsample_nearest2,
)
from .optim import adam_step
from .tensor import Param, Tensor, constant

__all__ = [
    "Param", "Tensor", "constant", "conv2d", "relu", "leaky_relu", "avgpool2",
    "upsample_nearest2", "concat_channels", "add", "add_scalars", "scale", "reshape",
    "stack", "project", "align", "mse_loss", "fft_loss", "dc_loss", "dft2",
    "adam_step", "save_checkpoint", "load_checkpoint",
]
