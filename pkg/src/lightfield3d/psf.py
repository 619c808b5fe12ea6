"""Parametric per-view, per-depth PSF stacks and the kernels derived from them.

The synthetic PSF is an isotropic Gaussian whose width grows linearly with
defocus and whose center drifts laterally with depth along the view's
illumination direction (parallax).  View 0 is axial; the remaining views
sit evenly on a ring.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import AlignKernelStack, PsfStack
from .errors import ConfigError, DegenerateSliceError, GeometryError


@dataclass(frozen=True)
class PsfConfig:
    nu: int = 13
    k: int = 11
    nz: int = 16
    z_focal: float = 7.5
    ring_radius_tan: float = 0.5
    shift_scale: float = 0.8
    sigma0: float = 1.0
    sigma_slope: float = 0.15

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise ConfigError(f"psf.k must be odd and positive, got {self.k}")
        if self.nu < 1:
            raise ConfigError(f"psf.nu must be >= 1, got {self.nu}")
        if self.nz < 1:
            raise ConfigError(f"psf.nz must be >= 1, got {self.nz}")
        if self.sigma0 <= 0:
            raise ConfigError(f"psf.sigma0 must be > 0, got {self.sigma0}")
        if self.sigma_slope < 0:
            raise ConfigError(f"psf.sigma_slope must be >= 0, got {self.sigma_slope}")


def view_tangents(nu: int, ring_radius_tan: float) -> np.ndarray:
    """(tan_x, tan_y) per view: view 0 axial, views 1.. evenly on a ring."""
    tans = np.zeros((nu, 2))
    if nu > 1:
        phi = 2.0 * np.pi * np.arange(nu - 1) / (nu - 1)
        tans[1:, 0] = ring_radius_tan * np.cos(phi)
        tans[1:, 1] = ring_radius_tan * np.sin(phi)
    return tans


def psf_centers(cfg: PsfConfig) -> np.ndarray:
    """Lateral slice centers ``[u, z] -> (cx, cy)`` in pixels from the kernel center."""
    tans = view_tangents(cfg.nu, cfg.ring_radius_tan)
    z_rel = np.arange(cfg.nz) - cfg.z_focal
    return cfg.shift_scale * z_rel[None, :, None] * tans[:, None, :]


def synthesize_psf(cfg: PsfConfig) -> PsfStack:
    half = (cfg.k - 1) // 2
    centers = psf_centers(cfg)
    if np.any(np.abs(centers) > 2 * half):
        u, z = np.argwhere(np.any(np.abs(centers) > 2 * half, axis=2))[0]
        raise GeometryError(
            f"PSF slice (u={u}, z={z}) centered at {tuple(centers[u, z])} "
            f"lies outside the {cfg.k}x{cfg.k} support"
        )
    sigma = cfg.sigma0 + cfg.sigma_slope * np.abs(np.arange(cfg.nz) - cfg.z_focal)
    grid = np.arange(cfg.k) - half
    dx = grid[None, None, :] - centers[:, :, 0, None]
    dy = grid[None, None, :] - centers[:, :, 1, None]
    two_s2 = 2.0 * sigma[None, :, None] ** 2
    gx = np.exp(-dx**2 / two_s2)
    gy = np.exp(-dy**2 / two_s2)
    slices = gy[:, :, :, None] * gx[:, :, None, :]
    sums = slices.sum(axis=(2, 3))
    if np.any(sums <= 0):
        raise GeometryError("a synthesized PSF slice has no mass inside its support")
    slices /= sums[:, :, None, None]
    return PsfStack(slices, normalized=True)


def flip_psf(p: PsfStack) -> PsfStack:
    """Point-reflect every kernel about its center."""
    return PsfStack(p.data[:, :, ::-1, ::-1], normalized=p.normalized)


def slice_centroids(p: PsfStack) -> np.ndarray:
    """Intensity-weighted centroid ``[u, z] -> (cx, cy)`` relative to the kernel center."""
    w = p.data.astype(np.float64)
    total = w.sum(axis=(2, 3))
    if np.any(total <= 0):
        u, z = np.argwhere(total <= 0)[0]
        raise DegenerateSliceError(f"PSF slice (u={u}, z={z}) has zero total mass")
    half = (p.k - 1) // 2
    grid = np.arange(p.k) - half
    cx = (w.sum(axis=2) * grid).sum(axis=2) / total
    cy = (w.sum(axis=3) * grid).sum(axis=2) / total
    return np.stack([cx, cy], axis=-1)


def _round_ties_to_zero(d: np.ndarray) -> np.ndarray:
    return (np.sign(d) * np.ceil(np.abs(d) - 0.5)).astype(np.int64)


def extract_centroid_kernels(p: PsfStack) -> AlignKernelStack:
    """Single-pixel alignment kernels at the rounded centroid of each slice.

    Rounding is to the nearest pixel with exact halves going toward the
    kernel center, so the impulse always stays inside the support.
    """
    offsets = _round_ties_to_zero(slice_centroids(p))
    return AlignKernelStack(offsets, p.k)
