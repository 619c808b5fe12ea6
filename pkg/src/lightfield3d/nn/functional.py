"""Differentiable operations.

Image tensors are ``(c, h, w)`` or ``(n, c, h, w)``.  ``conv2d`` follows the
usual network convention (cross-correlation, zero "same" padding); the
physical projection ops wrap ``lightfield3d.optics`` and keep its true
convolution.  There is no broadcasting: operands of binary ops must have
identical shapes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from ..optics import align_array, align_array_adjoint, backproject_array, project_array
from .fourier import dft2, dft2_adjoint_real
from .tensor import Tensor, constant


def _as_batch(x: np.ndarray):
    return (x[None], True) if x.ndim == 3 else (x, False)


def _padded_flat(xb: np.ndarray, p: int, k: int):
    """Lay (n, c, h, w) out as (c, n*H*W + tail) zero-padded planes, H = h + 2p.

    A kernel tap (a, b) then reads the contiguous column range starting at
    a*W + b, so each tap of the convolution is one strided GEMM with no copy.
    """
    n, c, h, w = xb.shape
    hp, wp = h + 2 * p, w + 2 * p
    length = n * hp * wp
    buf = np.zeros((c, length + (k - 1) * (wp + 1)), dtype=xb.dtype)
    buf[:, :length].reshape(c, n, hp, wp)[:, :, p:p + h, p:p + w] = xb.transpose(1, 0, 2, 3)
    return buf, length, wp


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Cross-correlation with zero "same" padding: out[o] = sum_i x[i] (*) w[o, i] + b[o]."""
    xb, squeeze = _as_batch(x.value)
    n, c_in, h, wd = xb.shape
    c_out, wc_in, k, k2 = w.value.shape
    if wc_in != c_in or k != k2 or k % 2 == 0:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with weight {w.shape}")
    if b is not None and b.shape != (c_out,):
        raise ShapeError(f"conv2d: bias shape {b.shape}, expected ({c_out},)")
    p = (k - 1) // 2
    buf, length, wp = _padded_flat(xb, p, k)
    hp = h + 2 * p
    taps = [(a, bb, a * wp + bb) for a in range(k) for bb in range(k)]
    wv = w.value
    wtaps = np.ascontiguousarray(wv.transpose(2, 3, 0, 1))  # (k, k, c_out, c_in)
    flat = np.zeros((c_out, length), dtype=np.result_type(xb, wv))
    for a, bb, off in taps:
        flat += wtaps[a, bb] @ buf[:, off:off + length]
    out = flat.reshape(c_out, n, hp, wp)[:, :, :h, :wd].transpose(1, 0, 2, 3)
    if b is not None:
        out = out + b.value[None, :, None, None]
    out = np.ascontiguousarray(out[0] if squeeze else out)

    def backward(g):
        gb = g[None] if squeeze else g
        gflat = np.zeros((c_out, length), dtype=g.dtype)
        gflat.reshape(c_out, n, hp, wp)[:, :, :h, :wd] = gb.transpose(1, 0, 2, 3)
        gtaps = np.empty_like(wtaps)
        for a, bb, off in taps:
            gtaps[a, bb] = gflat @ buf[:, off:off + length].T
        gw = np.ascontiguousarray(gtaps.transpose(2, 3, 0, 1))
        gx = None
        if x.requires_grad:
            gbuf = np.zeros_like(buf)
            for a, bb, off in taps:
                gbuf[:, off:off + length] += wtaps[a, bb].T @ gflat
            gx = gbuf[:, :length].reshape(c_in, n, hp, wp)[:, :, p:p + h, p:p + wd]
            gx = np.ascontiguousarray(gx.transpose(1, 0, 2, 3))
            gx = gx[0] if squeeze else gx
        gbias = gb.sum(axis=(0, 2, 3)) if b is not None else None
        return (gx, gw, gbias)

    parents = (x, w) if b is None else (x, w, b)
    return Tensor(out, parents, backward)


def relu(x: Tensor) -> Tensor:
    mask = x.value > 0
    return Tensor(np.where(mask, x.value, 0), (x,), lambda g: (g * mask,))


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    mask = x.value > 0
    factor = np.where(mask, 1.0, slope).astype(x.dtype)
    return Tensor(x.value * factor, (x,), lambda g: (g * factor,))


def avgpool2(x: Tensor) -> Tensor:
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise ShapeError(f"avgpool2 needs even spatial size, got {(h, w)}")
    lead = x.shape[:-2]
    out = x.value.reshape(*lead, h // 2, 2, w // 2, 2).mean(axis=(-3, -1))

    def backward(g):
        return (np.repeat(np.repeat(g, 2, axis=-2), 2, axis=-1) * 0.25,)

    return Tensor(out, (x,), backward)


def upsample_nearest2(x: Tensor) -> Tensor:
    out = np.repeat(np.repeat(x.value, 2, axis=-2), 2, axis=-1)
    h, w = x.shape[-2:]
    lead = x.shape[:-2]

    def backward(g):
        return (g.reshape(*lead, h, 2, w, 2).sum(axis=(-3, -1)),)

    return Tensor(out, (x,), backward)


def concat_channels(*xs: Tensor) -> Tensor:
    if len({x.value.ndim for x in xs}) != 1:
        raise ShapeError("concat_channels: mixed ranks")
    axis = xs[0].value.ndim - 3
    sizes = [x.shape[axis] for x in xs]
    out = np.concatenate([x.value for x in xs], axis=axis)
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(lo, hi), axis=axis) for lo, hi in zip(bounds[:-1], bounds[1:])
        )

    return Tensor(out, xs, backward)


def add(x: Tensor, y: Tensor) -> Tensor:
    if x.shape != y.shape:
        raise ShapeError(f"add: shapes {x.shape} and {y.shape} differ")
    return Tensor(x.value + y.value, (x, y), lambda g: (g, g))


def scale(x: Tensor, alpha: float) -> Tensor:
    return Tensor(x.value * alpha, (x,), lambda g: (g * alpha,))


def reshape(x: Tensor, shape) -> Tensor:
    old = x.shape
    return Tensor(x.value.reshape(shape), (x,), lambda g: (g.reshape(old),))


def stack(xs) -> Tensor:
    """Stack equally shaped tensors along a new leading axis."""
    out = np.stack([x.value for x in xs])
    return Tensor(out, tuple(xs), lambda g: tuple(g[i] for i in range(len(xs))))


def project(volume: Tensor, kernels: np.ndarray) -> Tensor:
    """Light-field forward projection of a ``(nz, h, w)`` tensor."""
    out = project_array(volume.value, kernels)
    return Tensor(out, (volume,), lambda g: (backproject_array(g, kernels).astype(volume.dtype),))


def align(features: Tensor, offsets: np.ndarray) -> Tensor:
    """Centroid-kernel alignment of ``(nu, c, h, w)`` view features to ``(nz, c, h, w)``."""
    out = align_array(features.value, offsets)
    return Tensor(out, (features,), lambda g: (align_array_adjoint(g, offsets),))


# --------------------------------------------------------------------------
# scalar losses


def _const(b):
    return b.value if isinstance(b, Tensor) else np.asarray(b)


def _tensor(a):
    if isinstance(a, Tensor):
        return a
    a = np.asarray(a)
    return constant(a if a.dtype.kind == "f" else a.astype(np.float64))


def _pair_parents(a, b):
    return (a, b) if isinstance(b, Tensor) else (a,)


def mse_loss(a: Tensor, b) -> Tensor:
    """sum((a - b)^2) / N."""
    a, bv = _tensor(a), _const(b)
    if a.shape != bv.shape:
        raise ShapeError(f"mse_loss: shapes {a.shape} and {bv.shape} differ")
    diff = a.value - bv
    n = diff.size
    out = np.asarray(np.sum(diff * diff) / n, dtype=a.dtype)

    def backward(g):
        ga = (2.0 / n) * g * diff
        return (ga, -ga)

    return Tensor(out, _pair_parents(a, b), backward)


def fft_loss(a: Tensor, b, mode: str = "l2") -> Tensor:
    """Frequency-domain distance per image, averaged over the leading axis.

    ``l2``: ||DFT(a_u) - DFT(b_u)||^2 / m; ``l1``: sum |DFT(a_u) - DFT(b_u)| / m,
    with m the pixels per image.  By Parseval, ``l2`` equals m times the MSE.
    """
    a, bv = _tensor(a), _const(b)
    if a.shape != bv.shape:
        raise ShapeError(f"fft_loss: shapes {a.shape} and {bv.shape} differ")
    diff = a.value - bv
    if diff.ndim == 2:
        diff = diff[None]
    nv = diff.shape[0]
    m = diff.shape[-1] * diff.shape[-2]
    spec = dft2(diff)
    mag = np.abs(spec)
    if mode == "l2":
        out = np.sum(mag * mag, dtype=np.float64) / (m * nv)
    elif mode == "l1":
        out = np.sum(mag, dtype=np.float64) / (m * nv)
    else:
        raise ValueError(f"fft_loss mode must be 'l2' or 'l1', got {mode!r}")

    def backward(g):
        if mode == "l2":
            pull = dft2_adjoint_real(spec) * (2.0 / (m * nv))
        else:
            unit = np.divide(spec, mag, out=np.zeros_like(spec), where=mag > 0)
            pull = dft2_adjoint_real(unit) * (1.0 / (m * nv))
        ga = (g * pull).astype(a.dtype).reshape(a.shape)
        return (ga, -ga)

    return Tensor(np.asarray(out, dtype=a.dtype), _pair_parents(a, b), backward)


def dc_loss(v: Tensor, bg: float) -> Tensor:
    """sum(max(0, bg - v)); the kink at v == bg gets subgradient 0."""
    v = _tensor(v)
    below = v.value < bg
    out = np.asarray(np.sum(np.where(below, bg - v.value, 0)), dtype=v.dtype)
    return Tensor(out, (v,), lambda g: (-(g * below).astype(v.dtype),))


def add_scalars(*terms: Tensor, weights=None) -> Tensor:
    """Weighted sum of scalar tensors."""
    weights = [1.0] * len(terms) if weights is None else list(weights)
    out = sum(w * t.value for w, t in zip(weights, terms))
    out = np.asarray(out, dtype=terms[0].dtype)
    return Tensor(out, terms, lambda g: tuple(np.asarray(g * w, dtype=g.dtype) for w in weights))
