"""View-split self-supervised light-field reconstruction."""

from .losses import dc_loss, estimate_background, fft_loss, mse_loss, total_loss, volume_background
from .model import (
    BranchOutput,
    V2vConfig,
    branch_forward,
    decode_volume,
    encode_views,
    init_weights,
    split_views,
)
from .train import TrainResult, fuse, reconstruct, train

__all__ = [
    "V2vConfig", "BranchOutput", "TrainResult", "split_views", "init_weights", "encode_views",
    "decode_volume", "branch_forward", "mse_loss", "fft_loss", "dc_loss", "total_loss",
    "estimate_background", "volume_background", "train", "fuse", "reconstruct",
]
