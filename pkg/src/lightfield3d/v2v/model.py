"""Two-branch reconstruction network.

Each branch encodes one subset of views with a shared per-view CNN, warps
the feature maps onto the depth grid with the centroid alignment kernels,
decodes a volume with a small U-Net and re-projects that volume onto the
complementary views.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn
from ..data import AlignKernelStack, PsfStack, ViewSplit
from ..errors import ConfigError, DataError
from ..optics import AlignedFeatures, FeatureMapSet

LEAK = 0.1


@dataclass(frozen=True)
class V2vConfig:
    enc_channels: int = 16
    enc_layers: int = 2
    dec_levels: int = 2
    dec_width: int = 32
    final_activation: str = "relu"
    alpha: float = 0.1
    beta: float = 1.0
    fft_mode: str = "l2"
    steps: int = 2000
    lr: float = 1e-3
    seed: int = 0
    bg_override: float | None = None
    use_split: bool = True
    use_align: bool = True

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("train.alpha and train.beta must be >= 0")
        if self.steps < 1:
            raise ConfigError(f"train.steps must be >= 1, got {self.steps}")
        if self.fft_mode not in ("l2", "l1"):
            raise ConfigError(f"train.fft_mode must be 'l2' or 'l1', got {self.fft_mode!r}")
        if self.bg_override is not None and not np.isfinite(self.bg_override):
            raise ConfigError(f"train.bg_override must be finite, got {self.bg_override}")
        if self.final_activation != "relu":
            raise ConfigError("train.final_activation supports only 'relu'")
        if self.enc_channels < 1 or self.enc_layers < 1 or self.dec_levels < 1 or self.dec_width < 1:
            raise ConfigError("network sizes must be positive")


def split_views(nu: int) -> ViewSplit:
    """Even view indices to subset a, odd to subset b."""
    if nu < 2:
        raise DataError(f"need at least 2 views to split, got {nu}")
    return ViewSplit(tuple(range(0, nu, 2)), tuple(range(1, nu, 2)))


def _conv_param(rng, c_out, c_in, k, dtype, name):
    std = np.sqrt(2.0 / (c_in * k * k))
    w = nn.Param((rng.standard_normal((c_out, c_in, k, k)) * std).astype(dtype), name=f"{name}.w")
    b = nn.Param(np.zeros(c_out, dtype=dtype), name=f"{name}.b")
    return w, b


def init_weights(cfg: V2vConfig, nz: int, dtype=np.float32, branches=("a", "b")) -> dict:
    """Kaiming fan-in initialized parameters, ordered by name.

    The encoder is shared by both branches; every branch owns a decoder.
    """
    rng = np.random.default_rng(cfg.seed)
    params = {}

    def conv(name, c_out, c_in, k=3):
        w, b = _conv_param(rng, c_out, c_in, k, dtype, name)
        params[w.name], params[b.name] = w, b

    c = cfg.enc_channels
    for i in range(cfg.enc_layers):
        conv(f"enc.{i}", c, 1 if i == 0 else c)
    for br in branches:
        width = cfg.dec_width
        c_in = nz * c
        for lvl in range(cfg.dec_levels):
            wl = width * 2**lvl
            conv(f"dec_{br}.down{lvl}.0", wl, c_in)
            conv(f"dec_{br}.down{lvl}.1", wl, wl)
            c_in = wl
        for lvl in reversed(range(cfg.dec_levels - 1)):
            wl = width * 2**lvl
            conv(f"dec_{br}.up{lvl}.0", wl, c_in + wl)
            conv(f"dec_{br}.up{lvl}.1", wl, wl)
            c_in = wl
        conv(f"dec_{br}.head", nz, c_in)
    return params


def _block(x, params, name, act=True):
    y = nn.conv2d(x, params[f"{name}.w"], params[f"{name}.b"])
    return nn.leaky_relu(y, LEAK) if act else y


def encode_tensor(views: nn.Tensor, params: dict, cfg: V2vConfig) -> nn.Tensor:
    """(n, h, w) views -> (n, c, h, w) features, each view through the same CNN."""
    n, h, w = views.shape
    x = nn.reshape(views, (n, 1, h, w))
    for i in range(cfg.enc_layers):
        x = _block(x, params, f"enc.{i}")
    return x


def decode_tensor(aligned: nn.Tensor, params: dict, cfg: V2vConfig, branch: str,
                  out_scale: float = 1.0) -> nn.Tensor:
    """(nz, c, h, w) aligned features -> (nz, h, w) nonnegative volume."""
    nz, c, h, w = aligned.shape
    x = nn.reshape(aligned, (nz * c, h, w))
    skips = []
    for lvl in range(cfg.dec_levels):
        if lvl > 0:
            x = nn.avgpool2(x)
        x = _block(x, params, f"dec_{branch}.down{lvl}.0")
        x = _block(x, params, f"dec_{branch}.down{lvl}.1")
        skips.append(x)
    for lvl in reversed(range(cfg.dec_levels - 1)):
        x = nn.concat_channels(nn.upsample_nearest2(x), skips[lvl])
        x = _block(x, params, f"dec_{branch}.up{lvl}.0")
        x = _block(x, params, f"dec_{branch}.up{lvl}.1")
    x = _block(x, params, f"dec_{branch}.head", act=False)
    x = nn.relu(x)
    return nn.scale(x, out_scale) if out_scale != 1.0 else x


def encode_views(views: np.ndarray, params: dict, cfg: V2vConfig) -> FeatureMapSet:
    return FeatureMapSet(encode_tensor(nn.constant(np.asarray(views)), params, cfg).value)


def decode_volume(a: AlignedFeatures, params: dict, cfg: V2vConfig, branch: str = "a") -> np.ndarray:
    return decode_tensor(nn.constant(a.data), params, cfg, branch).value


@dataclass
class BranchOutput:
    volume: nn.Tensor
    sim_views: nn.Tensor
    input_indices: tuple
    sim_indices: tuple


def branch_forward(lf_views: np.ndarray, input_idx, sim_idx, psf: PsfStack, kernels: AlignKernelStack,
                   params: dict, cfg: V2vConfig, branch: str, in_scale: float = 1.0,
                   out_scale: float = 1.0) -> BranchOutput:
    """Reconstruct from the ``input_idx`` views and simulate the ``sim_idx`` views.

    ``lf_views`` holds all views; ``kernels`` holds every view's alignment
    offsets over all depths and is restricted here to the input views.
    """
    input_idx, sim_idx = tuple(input_idx), tuple(sim_idx)
    views = nn.constant(np.asarray(lf_views[list(input_idx)]) / in_scale)
    feats = encode_tensor(views, params, cfg)
    aligned = nn.align(feats, kernels.offsets[list(input_idx)])
    volume = decode_tensor(aligned, params, cfg, branch, out_scale)
    sim = nn.project(volume, psf.data[list(sim_idx)].astype(volume.dtype))
    return BranchOutput(volume, sim, input_idx, sim_idx)
