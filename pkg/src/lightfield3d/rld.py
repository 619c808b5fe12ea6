"""Multi-view Richardson-Lucy deconvolution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LightField, PsfStack, Volume
from .errors import ConfigError, NumericError, ShapeError
from .optics import backproject_array, project_array


@dataclass(frozen=True)
class RldConfig:
    iterations: int = 100
    epsilon: float = 1e-8
    init: str = "uniform"

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError(f"rld.iterations must be >= 0, got {self.iterations}")
        if self.epsilon <= 0:
            raise ConfigError(f"rld.epsilon must be > 0, got {self.epsilon}")
        if self.init not in ("uniform", "backproject"):
            raise ConfigError(f"rld.init must be 'uniform' or 'backproject', got {self.init!r}")


def poisson_loglik(lf: np.ndarray, estimate: np.ndarray) -> float:
    """sum(lf * log(estimate) - estimate), with 0 * log(0) taken as 0."""
    lf = np.asarray(lf, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    pos = lf > 0
    return float(np.sum(lf[pos] * np.log(est[pos])) - np.sum(est))


def _step(v, lf, kernels, norm, eps):
    ratio = lf / (project_array(v, kernels) + eps)
    return v * backproject_array(ratio, kernels) / (norm + eps)


def normalization(p: PsfStack, shape) -> np.ndarray:
    """Back-projection of an all-ones light field (per-voxel sensitivity)."""
    ny, nx = shape
    return backproject_array(np.ones((p.nu, ny, nx), dtype=p.data.dtype), p.data)


def rld_step(v: Volume, lf: LightField, p: PsfStack, eps: float = 1e-8) -> Volume:
    if v.nz != p.nz or lf.nu != p.nu or (v.ny, v.nx) != (lf.ny, lf.nx):
        raise ShapeError(
            f"volume {v.data.shape}, light field {lf.data.shape} and PSF {p.data.shape} disagree"
        )
    norm = normalization(p, (lf.ny, lf.nx))
    return Volume(np.maximum(_step(v.data, lf.data, p.data, norm, eps), 0.0))


def initial_volume(lf: LightField, p: PsfStack, init: str) -> np.ndarray:
    shape = (p.nz, lf.ny, lf.nx)
    dtype = np.result_type(lf.data, p.data)
    if init == "uniform":
        return np.full(shape, np.mean(lf.data, dtype=np.float64), dtype=dtype)
    return np.maximum(backproject_array(lf.data, p.data), 0.0)


def rld_solve(lf: LightField, p: PsfStack, cfg: RldConfig = RldConfig(), callback=None):
    """Run ``cfg.iterations`` multiplicative updates from the chosen init.

    Returns the final volume and the Poisson log-likelihood after each
    iteration.  ``callback(i, volume_array)`` is invoked after iteration i.
    """
    if lf.nu != p.nu:
        raise ShapeError(f"light field has {lf.nu} views but PSF stack has {p.nu}")
    v = initial_volume(lf, p, cfg.init)
    norm = normalization(p, (lf.ny, lf.nx))
    log = []
    for i in range(cfg.iterations):
        v = np.maximum(_step(v, lf.data, p.data, norm, cfg.epsilon), 0.0)
        if not np.all(np.isfinite(v)):
            raise NumericError(f"RLD produced non-finite values at iteration {i + 1}")
        log.append(poisson_loglik(lf.data, project_array(v, p.data)))
        if callback is not None:
            callback(i + 1, v)
    return Volume(v), log
