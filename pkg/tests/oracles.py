"""Slow, obviously-correct reference computations used as test oracles.

None of these share code with the package paths they check.
"""

import numpy as np


def conv2d_same_direct(img, ker):
    """True 2D convolution, zero padding, same size, by explicit sums."""
    ny, nx = img.shape
    k = ker.shape[0]
    h = (k - 1) // 2
    out = np.zeros((ny, nx))
    for y in range(ny):
        for x in range(nx):
            acc = 0.0
            for j in range(-h, h + 1):
                for i in range(-h, h + 1):
                    yy, xx = y - j, x - i
                    if 0 <= yy < ny and 0 <= xx < nx:
                        acc += img[yy, xx] * ker[j + h, i + h]
            out[y, x] = acc
    return out


def corr2d_same_direct(img, ker):
    """Cross-correlation, zero padding, same size, by explicit sums."""
    ny, nx = img.shape
    k = ker.shape[0]
    h = (k - 1) // 2
    out = np.zeros((ny, nx))
    for y in range(ny):
        for x in range(nx):
            acc = 0.0
            for j in range(-h, h + 1):
                for i in range(-h, h + 1):
                    yy, xx = y + j, x + i
                    if 0 <= yy < ny and 0 <= xx < nx:
                        acc += img[yy, xx] * ker[j + h, i + h]
            out[y, x] = acc
    return out


def forward_project_direct(vol, psf):
    """vol (nz, ny, nx), psf (nu, nz, k, k) -> (nu, ny, nx) by explicit sums."""
    nu, nz = psf.shape[:2]
    return np.stack([sum(conv2d_same_direct(vol[z], psf[u, z]) for z in range(nz)) for u in range(nu)])


def conv_layer_direct(x, w, b):
    """Network conv layer (correlation) on (c_in, h, w) input."""
    c_out = w.shape[0]
    return np.stack([
        sum(corr2d_same_direct(x[i], w[o, i]) for i in range(x.shape[0])) + b[o]
        for o in range(c_out)
    ])


def naive_dft2(img):
    """O(n^4) unnormalized forward DFT."""
    h, w = img.shape
    out = np.zeros((h, w), dtype=complex)
    for f in range(h):
        for g in range(w):
            acc = 0j
            for y in range(h):
                for x in range(w):
                    acc += img[y, x] * np.exp(-2j * np.pi * (f * y / h + g * x / w))
            out[f, g] = acc
    return out


def numeric_grad(fn, x, h=1e-3):
    """Central differences of scalar ``fn()`` w.r.t. every entry of array ``x`` (mutated in place)."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn()
        flat[i] = orig - h
        fm = fn()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def rel_err(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-12))


def ssim_sliding_direct(a, b, data_range, size=11, sigma=1.5):
    """Mean SSIM over every fully contained window, one window at a time."""
    ax = np.arange(size) - (size - 1) / 2
    g1 = np.exp(-ax**2 / (2 * sigma**2))
    win = np.outer(g1, g1)
    win /= win.sum()
    c1, c2 = (0.01 * data_range) ** 2, (0.03 * data_range) ** 2
    vals = []
    for y in range(a.shape[0] - size + 1):
        for x in range(a.shape[1] - size + 1):
            pa = a[y:y + size, x:x + size]
            pb = b[y:y + size, x:x + size]
            ma, mb = np.sum(win * pa), np.sum(win * pb)
            va = np.sum(win * (pa - ma) ** 2)
            vb = np.sum(win * (pb - mb) ** 2)
            cov = np.sum(win * (pa - ma) * (pb - mb))
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def ball_voxel_count(radius):
    """Lattice points within ``radius`` of an integer center."""
    r = int(np.floor(radius))
    return sum(
        1
        for z in range(-r, r + 1)
        for y in range(-r, r + 1)
        for x in range(-r, r + 1)
        if x * x + y * y + z * z <= radius * radius
    )
