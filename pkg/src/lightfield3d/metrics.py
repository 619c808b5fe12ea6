"""PSNR and SSIM after background subtraction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .data import Volume
from .errors import ShapeError

PSNR_TEXT_CAP = 99.0
K1, K2 = 0.01, 0.03
WIN, WIN_SIGMA = 11, 1.5


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    ssim_mip: float
    bg_used: float

    def to_text(self) -> str:
        psnr = min(self.psnr, PSNR_TEXT_CAP)
        return (f"psnr = {psnr:.6f}\nssim = {self.ssim:.6f}\n"
                f"ssim_mip = {self.ssim_mip:.6f}\nbg_used = {self.bg_used!r}\n")


def _arr(v):
    return np.asarray(getattr(v, "data", v), dtype=np.float64)


def prepare(v, bg: float) -> np.ndarray:
    return np.maximum(_arr(v) - bg, 0.0)


def psnr(a, b, peak: float) -> float:
    """10 log10(peak^2 / MSE); identical inputs give +inf."""
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise ShapeError(f"psnr: shapes {a.shape} and {b.shape} differ")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def gaussian_window(size: int = WIN, sigma: float = WIN_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-x**2 / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable weighted window mean over fully contained windows of the last two axes."""
    out = correlate1d(img, g, axis=-1, mode="constant")
    out = correlate1d(out, g, axis=-2, mode="constant")
    h = len(g) // 2
    return out[..., h:img.shape[-2] - h, h:img.shape[-1] - h]


def ssim_map(a: np.ndarray, b: np.ndarray, data_range: float) -> np.ndarray:
    """Local SSIM of 2D images (or stacks of them), one value per full window."""
    g = gaussian_window()
    if min(a.shape[-2:]) < WIN:
        raise ShapeError(f"SSIM needs images of at least {WIN}x{WIN}, got {a.shape[-2:]}")
    c1, c2 = (K1 * data_range) ** 2, (K2 * data_range) ** 2
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    saa = _filter_valid(a * a, g) - mu_a**2
    sbb = _filter_valid(b * b, g) - mu_b**2
    sab = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (saa + sbb + c2)
    return num / den


def _default_range(a, b) -> float:
    rng = max(a.max(), b.max()) - min(a.min(), b.min())
    return float(rng) if rng > 0 else 1.0


def ssim(a, b, data_range: float | None = None) -> float:
    """Mean local SSIM over every z slice (2D arrays are treated as one slice)."""
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise ShapeError(f"ssim: shapes {a.shape} and {b.shape} differ")
    if data_range is None:
        data_range = _default_range(a, b)
    if np.array_equal(a, b):
        return 1.0
    return float(np.mean(ssim_map(a, b, data_range)))


def evaluate(recon, truth, bg: float = 0.0) -> MetricReport:
    """Subtract ``bg`` from both volumes, then PSNR (peak = truth max) and SSIM."""
    r, t = prepare(recon, bg), prepare(truth, bg)
    peak = float(t.max())
    if peak <= 0:
        peak = 1.0
    return MetricReport(
        psnr=psnr(r, t, peak),
        ssim=ssim(r, t, data_range=peak),
        ssim_mip=ssim(r.max(axis=0), t.max(axis=0), data_range=peak),
        bg_used=float(bg),
    )
