"""Training objective: data fidelity in space and frequency plus the below-background penalty."""

from __future__ import annotations

import numpy as np

from ..data import LightField, PsfStack
from ..errors import DataError
from .. import nn


def mse_loss(a, b):
    return nn.mse_loss(a, b)


def fft_loss(a, b, mode: str = "l2"):
    return nn.fft_loss(a, b, mode)


def dc_loss(v, bg: float):
    return nn.dc_loss(v, bg)


def total_loss(sim_views, real_views, volume, bg: float, alpha: float = 0.1, beta: float = 1.0,
               fft_mode: str = "l2"):
    """Returns ``(total, mse, fft, dc)`` scalar tensors for one branch."""
    mse = nn.mse_loss(sim_views, real_views)
    fft = nn.fft_loss(sim_views, real_views, fft_mode)
    dc = nn.dc_loss(volume, bg)
    total = nn.add_scalars(mse, fft, dc, weights=(1.0, alpha, beta))
    return total, mse, fft, dc


def estimate_background(lf) -> float:
    """Center of the modal bin of a 256-bin histogram over all light-field pixels.

    Ties go to the lowest bin.
    """
    arr = np.asarray(lf.data if isinstance(lf, LightField) else lf, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DataError("cannot estimate the background of an empty light field")
    lo, hi = arr.min(), arr.max()
    if lo == hi:
        return float(lo)
    counts, edges = np.histogram(arr, bins=256, range=(lo, hi))
    i = int(np.argmax(counts))
    return float(0.5 * (edges[i] + edges[i + 1]))


def volume_background(bg_lf: float, psf: PsfStack) -> float:
    """Voxel level whose uniform volume projects to ``bg_lf`` on an average view.

    With unit-sum PSF slices this is ``bg_lf / nz``.
    """
    depth_gain = psf.data.sum(axis=(1, 2, 3), dtype=np.float64).mean()
    return float(bg_lf / depth_gain)
