"""Forward projection, back-projection and centroid-kernel feature alignment.

Convolutions here are true 2D convolutions with zero padding and "same"
output size::

    out[y, x] = sum_{i,j} img[y - j, x - i] * ker[j + h, i + h],  h = (k - 1) // 2

With that orientation, back-projection through the point-reflected PSF is
the exact adjoint of forward projection.  Note the neural-network layers in
``lightfield3d.nn`` use correlation instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data import AlignKernelStack, ErrorField, LightField, PsfStack, Volume
from .errors import DataError, ShapeError


@dataclass(frozen=True)
class FeatureMapSet:
    """Per-view feature planes, ``data[u, c, y, x]``."""

    data: np.ndarray

    def __post_init__(self):
        if np.ndim(self.data) != 4:
            raise ShapeError(f"FeatureMapSet: expected (nu, nc, ny, nx), got {np.shape(self.data)}")
        if not np.all(np.isfinite(self.data)):
            raise DataError("FeatureMapSet: non-finite values")


@dataclass(frozen=True)
class AlignedFeatures:
    """View-aggregated features on the volume grid, ``data[z, c, y, x]``."""

    data: np.ndarray


def _patches(stack: np.ndarray, k: int) -> np.ndarray:
    """(n, ny, nx) -> (n, ny, nx, k, k) zero-padded neighbourhoods."""
    h = (k - 1) // 2
    padded = np.pad(stack, ((0, 0), (h, h), (h, h)))
    return sliding_window_view(padded, (k, k), axis=(1, 2))


def project_array(vol: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Sum over depth of per-slice convolutions.

    vol: (nz, ny, nx); kernels: (nu, nz, k, k) -> (nu, ny, nx)
    """
    nz, ny, nx = vol.shape
    nu, knz, k, _ = kernels.shape
    if knz != nz:
        raise ShapeError(f"volume has nz={nz} but PSF stack has nz={knz}")
    dtype = np.result_type(vol, kernels)
    cols = _patches(vol.astype(dtype, copy=False), k).reshape(nz, ny * nx, k * k)
    flipped = kernels[:, :, ::-1, ::-1].astype(dtype).reshape(nu, nz, k * k).transpose(1, 2, 0)
    per_depth = np.matmul(cols, flipped)  # (nz, ny*nx, nu)
    out = per_depth[0].copy()
    for z in range(1, nz):
        out += per_depth[z]
    return np.ascontiguousarray(out.T).reshape(nu, ny, nx)


def backproject_array(err: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`project_array`.

    err: (nu, ny, nx); kernels: (nu, nz, k, k) -> (nz, ny, nx)
    """
    nu, ny, nx = err.shape
    knu, nz, k, _ = kernels.shape
    if knu != nu:
        raise ShapeError(f"error field has nu={nu} but PSF stack has nu={knu}")
    dtype = np.result_type(err, kernels)
    cols = _patches(err.astype(dtype, copy=False), k)  # (nu, ny, nx, k, k)
    cols = cols.transpose(1, 2, 0, 3, 4).reshape(ny * nx, nu * k * k)
    kmat = kernels.astype(dtype).transpose(0, 2, 3, 1).reshape(nu * k * k, nz)
    return np.ascontiguousarray((cols @ kmat).T).reshape(nz, ny, nx)


def forward_project(v: Volume, p: PsfStack) -> LightField:
    return LightField(project_array(v.data, p.data))


def back_project(e, p: PsfStack) -> np.ndarray:
    """Back-project a light-field shaped field; the result may be signed."""
    arr = e.data if isinstance(e, (ErrorField, LightField)) else np.asarray(e)
    if arr.ndim != 3:
        raise ShapeError(f"expected a (nu, ny, nx) field, got shape {arr.shape}")
    return backproject_array(arr, p.data)


def _shift_slices(n: int, d: int) -> tuple[slice, slice]:
    """(dst, src) slices realizing out[i] = in[i + d] with zero fill."""
    d = int(d)
    if abs(d) >= n:
        return slice(0, 0), slice(0, 0)
    return slice(max(0, -d), n - max(0, d)), slice(max(0, d), n + min(0, d))


def align_array(feat: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Shift each view's planes by minus its centroid offset and average over views.

    feat: (nu, c, ny, nx); offsets: (nu, nz, 2) -> (nz, c, ny, nx)
    """
    nu, c, ny, nx = feat.shape
    if offsets.shape[0] != nu:
        raise ShapeError(f"features have nu={nu} but kernels have nu={offsets.shape[0]}")
    nz = offsets.shape[1]
    out = np.zeros((nz, c, ny, nx), dtype=feat.dtype)
    for z in range(nz):
        for u in range(nu):
            dx, dy = offsets[u, z]
            ydst, ysrc = _shift_slices(ny, dy)
            xdst, xsrc = _shift_slices(nx, dx)
            out[z, :, ydst, xdst] += feat[u, :, ysrc, xsrc]
    out /= nu
    return out


def align_array_adjoint(grad: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`align_array`: (nz, c, ny, nx) -> (nu, c, ny, nx)."""
    nz, c, ny, nx = grad.shape
    nu = offsets.shape[0]
    out = np.zeros((nu, c, ny, nx), dtype=grad.dtype)
    for u in range(nu):
        for z in range(nz):
            dx, dy = offsets[u, z]
            ydst, ysrc = _shift_slices(ny, dy)
            xdst, xsrc = _shift_slices(nx, dx)
            out[u, :, ysrc, xsrc] += grad[z, :, ydst, xdst]
    out /= nu
    return out


def align_features(f: FeatureMapSet, k: AlignKernelStack, aggregate: str = "mean") -> AlignedFeatures:
    if aggregate != "mean":
        raise ValueError(f"unsupported aggregate {aggregate!r}")
    return AlignedFeatures(align_array(np.asarray(f.data), k.offsets))
