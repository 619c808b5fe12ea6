"""Unnormalized 2D discrete Fourier transform by separable DFT matrices.

``X[f, g] = sum_{y, x} img[y, x] * exp(-2j*pi*(f*y/H + g*x/W))``.  Works for
any image size; at the sizes used here two dense matrix products are both
exact and fast.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def dft_matrix(n: int, dtype=np.complex128) -> np.ndarray:
    idx = np.arange(n)
    phase = (np.outer(idx, idx) % n) * (-2.0 * np.pi / n)
    mat = np.exp(1j * phase).astype(dtype)
    mat.flags.writeable = False
    return mat


def _complex_for(dtype) -> np.dtype:
    return np.complex64 if np.dtype(dtype) == np.float32 else np.complex128


def dft2(x: np.ndarray) -> np.ndarray:
    """Transform the last two axes of a real array."""
    x = np.asarray(x)
    ctype = _complex_for(x.dtype)
    h, w = x.shape[-2:]
    fh = dft_matrix(h, ctype)
    fw = dft_matrix(w, ctype)
    return fh @ x.astype(ctype) @ fw


def dft2_adjoint_real(spec: np.ndarray) -> np.ndarray:
    """Real part of the adjoint transform, i.e. the gradient pull-back to a real image."""
    h, w = spec.shape[-2:]
    fh = dft_matrix(h, spec.dtype)
    fw = dft_matrix(w, spec.dtype)
    return np.real(fh.conj() @ spec @ fw.conj())
