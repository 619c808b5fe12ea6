"""Domain types and the binary volume / light-field / PSF file formats.

Arrays are held in C order with x varying fastest, so a volume is indexed
``data[z, y, x]`` and its flat index is ``x + nx * (y + ny * z)``.  The same
holds for light fields (``data[u, y, x]``) and PSF stacks
(``data[u, z, ky, kx]``), which keeps each (u, z) kernel and each image row
contiguous.

Files are an 8-byte magic, three little-endian uint32 dimensions and a
little-endian float32 payload in that layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, LengthError, ShapeError

VOLUME_MAGIC = b"V2V3VOL1"
LIGHTFIELD_MAGIC = b"V2V3LF_1"
PSF_MAGIC = b"V2V3PSF1"

_HEADER = struct.Struct("<8s3I")
_F32 = np.dtype("<f4")


def _frozen(data, ndim: int, name: str, nonneg: bool) -> np.ndarray:
    arr = np.array(data, copy=True)
    if arr.dtype.kind not in "fiu":
        raise DataError(f"{name}: expected a real array, got dtype {arr.dtype}")
    if arr.dtype.kind != "f":
        arr = arr.astype(np.float64)
    if arr.ndim != ndim:
        raise ShapeError(f"{name}: expected {ndim} dimensions, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"{name}: empty dimension in shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name}: non-finite values")
    if nonneg and np.any(arr < 0):
        raise DataError(f"{name}: negative values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Volume:
    """Nonnegative 3D intensity grid, ``data[z, y, x]``."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 3, "Volume", nonneg=True))

    @property
    def nz(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def nx(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LightField:
    """Stack of nonnegative 2D views, ``data[u, y, x]``."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 3, "LightField", nonneg=True))

    @property
    def nu(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def nx(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class ErrorField:
    """Light-field shaped map of signed values (residuals, ratios)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 3, "ErrorField", nonneg=False))

    @property
    def nu(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class PsfStack:
    """One k x k kernel per (view, depth), ``data[u, z, ky, kx]``.

    ``normalized`` promises that every slice sums to one within 1e-6; the
    flag is checked on construction.
    """

    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        arr = _frozen(self.data, 4, "PsfStack", nonneg=True)
        k = arr.shape[2]
        if arr.shape[3] != k or k % 2 == 0:
            raise ShapeError(f"PsfStack: kernels must be square with odd side, got {arr.shape[2:]}")
        if self.normalized:
            sums = arr.sum(axis=(2, 3), dtype=np.float64)
            if np.max(np.abs(sums - 1.0)) > 1e-6:
                raise DataError("PsfStack: flagged normalized but a slice does not sum to 1")
        object.__setattr__(self, "data", arr)

    @property
    def nu(self) -> int:
        return self.data.shape[0]

    @property
    def nz(self) -> int:
        return self.data.shape[1]

    @property
    def k(self) -> int:
        return self.data.shape[2]

    def views(self, indices) -> "PsfStack":
        """Sub-stack restricted to the given view indices, in that order."""
        return PsfStack(self.data[list(indices)], normalized=self.normalized)


@dataclass(frozen=True)
class AlignKernelStack:
    """Integer centroid offsets ``offsets[u, z] = (dx, dy)`` of a PSF stack.

    Each offset stands for a k x k kernel holding a single unit impulse at
    that position relative to the kernel center.
    """

    offsets: np.ndarray
    k: int

    def __post_init__(self):
        off = np.array(self.offsets, copy=True)
        if off.ndim != 3 or off.shape[2] != 2:
            raise ShapeError(f"AlignKernelStack: expected shape (nu, nz, 2), got {off.shape}")
        if off.dtype.kind not in "iu":
            if not np.array_equal(off, np.round(off)):
                raise DataError("AlignKernelStack: offsets must be integers")
        off = off.astype(np.int64)
        half = (self.k - 1) // 2
        if self.k % 2 == 0 or np.any(np.abs(off) > half):
            raise DataError(f"AlignKernelStack: offsets exceed kernel half-width {half}")
        off.flags.writeable = False
        object.__setattr__(self, "offsets", off)

    @property
    def nu(self) -> int:
        return self.offsets.shape[0]

    @property
    def nz(self) -> int:
        return self.offsets.shape[1]

    def views(self, indices) -> "AlignKernelStack":
        return AlignKernelStack(self.offsets[list(indices)], self.k)

    def zeroed(self) -> "AlignKernelStack":
        """Same shape with every offset at the kernel center."""
        return AlignKernelStack(np.zeros_like(self.offsets), self.k)


@dataclass(frozen=True)
class ViewSplit:
    """Partition of the view indices into two disjoint sorted subsets."""

    subset_a: tuple = field(default_factory=tuple)
    subset_b: tuple = field(default_factory=tuple)

    def __post_init__(self):
        a = tuple(sorted(int(i) for i in self.subset_a))
        b = tuple(sorted(int(i) for i in self.subset_b))
        nu = len(a) + len(b)
        if set(a) & set(b):
            raise DataError("ViewSplit: subsets overlap")
        if set(a) | set(b) != set(range(nu)) or len(set(a)) != len(a) or len(set(b)) != len(b):
            raise DataError("ViewSplit: subsets do not cover 0..nu-1")
        if abs(len(a) - len(b)) > 1:
            raise DataError("ViewSplit: subset sizes differ by more than one")
        object.__setattr__(self, "subset_a", a)
        object.__setattr__(self, "subset_b", b)

    @property
    def nu(self) -> int:
        return len(self.subset_a) + len(self.subset_b)


# --------------------------------------------------------------------------
# binary formats


def _write(path, magic: bytes, dims, data: np.ndarray) -> None:
    payload = np.ascontiguousarray(data, dtype=_F32)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, *dims))
        fh.write(payload.tobytes(order="C"))


def _read(path, magic: bytes, count=lambda a, b, c: a * b * c) -> tuple[tuple[int, int, int], np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:8] != magic:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}, expected {magic!r}")
    if len(raw) < _HEADER.size:
        raise LengthError(f"{path}: truncated header")
    _, d0, d1, d2 = _HEADER.unpack_from(raw)
    expected = count(d0, d1, d2) * _F32.itemsize
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise LengthError(f"{path}: payload has {len(body)} bytes, expected {expected}")
    data = np.frombuffer(body, dtype=_F32).astype(np.float32)
    if np.any(np.isnan(data)):
        raise DataError(f"{path}: NaN in payload")
    return (d0, d1, d2), data


def write_volume(path, v: Volume) -> None:
    _write(path, VOLUME_MAGIC, (v.nx, v.ny, v.nz), v.data)


def read_volume(path) -> Volume:
    (nx, ny, nz), data = _read(path, VOLUME_MAGIC)
    return Volume(data.reshape(nz, ny, nx))


def write_lightfield(path, lf: LightField) -> None:
    _write(path, LIGHTFIELD_MAGIC, (lf.nu, lf.nx, lf.ny), lf.data)


def read_lightfield(path) -> LightField:
    (nu, nx, ny), data = _read(path, LIGHTFIELD_MAGIC)
    return LightField(data.reshape(nu, ny, nx))


def write_psf(path, p: PsfStack) -> None:
    _write(path, PSF_MAGIC, (p.nu, p.k, p.nz), p.data)


def read_psf(path) -> PsfStack:
    (nu, k, nz), data = _read(path, PSF_MAGIC, count=lambda a, b, c: a * b * b * c)
    arr = data.reshape(nu, nz, k, k)
    sums = arr.sum(axis=(2, 3), dtype=np.float64)
    return PsfStack(arr, normalized=bool(np.all(np.abs(sums - 1.0) <= 1e-6)))
