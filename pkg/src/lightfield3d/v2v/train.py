"""Per-scene unsupervised optimization of the two-branch model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .. import nn
from ..data import LightField, PsfStack, Volume
from ..errors import NumericError, ShapeError
from ..psf import extract_centroid_kernels
from .losses import estimate_background, total_loss, volume_background
from .model import V2vConfig, branch_forward, init_weights, split_views

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    params: dict
    loss_log: list = field(default_factory=list)  # (step, total, mse, fft, dc)
    volume_a: Volume | None = None
    volume_b: Volume | None = None
    fused: Volume | None = None
    bg_lf: float = 0.0
    bg_volume: float = 0.0
    in_scale: float = 1.0
    out_scale: float = 1.0


def fuse(va: Volume, vb: Volume) -> Volume:
    if va.data.shape != vb.data.shape:
        raise ShapeError(f"cannot fuse volumes of shapes {va.data.shape} and {vb.data.shape}")
    return Volume(0.5 * (va.data + vb.data))


def branch_plan(nu: int, cfg: V2vConfig):
    """(branch, input views, supervised views) for both branches."""
    if not cfg.use_split:
        every = tuple(range(nu))
        return [("a", every, every), ("b", every, every)]
    split = split_views(nu)
    return [("a", split.subset_a, split.subset_b), ("b", split.subset_b, split.subset_a)]


def input_scale(lf: LightField) -> float:
    scale = float(np.percentile(lf.data, 99.9))
    return scale if scale > 0 else 1.0


def train(lf: LightField, psf: PsfStack, cfg: V2vConfig = V2vConfig(), dtype=np.float32,
          progress=None) -> TrainResult:
    """Fit both branches to one noisy light field.

    Each step sums the two branch losses, back-propagates once and applies
    one Adam update to the shared encoder and both decoders.
    ``progress(step, entry)`` is called after every step when given.
    """
    if lf.nu != psf.nu:
        raise ShapeError(f"light field has {lf.nu} views but PSF stack has {psf.nu}")
    nz = psf.nz
    views = lf.data.astype(dtype)
    kernels = extract_centroid_kernels(psf)
    if not cfg.use_align:
        kernels = kernels.zeroed()
    bg_lf = estimate_background(lf)
    bg = cfg.bg_override if cfg.bg_override is not None else volume_background(bg_lf, psf)
    in_scale = input_scale(lf)
    out_scale = in_scale / nz

    params = init_weights(cfg, nz, dtype)
    plist = list(params.values())
    plan = branch_plan(lf.nu, cfg)
    result = TrainResult(params, bg_lf=bg_lf, bg_volume=bg, in_scale=in_scale, out_scale=out_scale)

    for step in range(1, cfg.steps + 1):
        terms = []
        for branch, inp, sup in plan:
            if cfg.use_split:
                assert set(inp).isdisjoint(sup), "branch input and supervision views overlap"
            out = branch_forward(views, inp, sup, psf, kernels, params, cfg, branch, in_scale, out_scale)
            terms.append(total_loss(out.sim_views, views[list(sup)], out.volume, bg,
                                    cfg.alpha, cfg.beta, cfg.fft_mode))
        loss = nn.add_scalars(*(t[0] for t in terms))
        entry = (step, loss.item(), *(sum(t[i].item() for t in terms) for i in (1, 2, 3)))
        if not np.all(np.isfinite(entry[1:])):
            raise NumericError(f"non-finite loss at step {step}: total={entry[1]} mse={entry[2]} "
                               f"fft={entry[3]} dc={entry[4]}")
        for p in plist:
            p.zero_grad()
        loss.backward()
        nn.adam_step(plist, [p.grad for p in plist], cfg.lr)
        result.loss_log.append(entry)
        if progress is not None:
            progress(step, entry)
        if step == 1 or step % 100 == 0:
            log.debug("step %d total %.6g", step, entry[1])

    vols = {}
    for branch, inp, sup in plan:
        out = branch_forward(views, inp, sup, psf, kernels, params, cfg, branch, in_scale, out_scale)
        vols[branch] = Volume(out.volume.value)
    result.volume_a, result.volume_b = vols["a"], vols["b"]
    result.fused = fuse(vols["a"], vols["b"])
    return result


def reconstruct(lf: LightField, psf: PsfStack, params: dict, cfg: V2vConfig, in_scale: float,
                dtype=np.float32) -> tuple[Volume, Volume, Volume]:
    """Branch volumes and their fusion from trained parameters."""
    views = lf.data.astype(dtype)
    kernels = extract_centroid_kernels(psf)
    if not cfg.use_align:
        kernels = kernels.zeroed()
    out_scale = in_scale / psf.nz
    vols = []
    for branch, inp, sup in branch_plan(lf.nu, cfg):
        out = branch_forward(views, inp, sup, psf, kernels, params, cfg, branch, in_scale, out_scale)
        vols.append(Volume(out.volume.value))
    return vols[0], vols[1], fuse(vols[0], vols[1])
