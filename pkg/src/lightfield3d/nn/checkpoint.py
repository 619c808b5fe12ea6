"""Named-array checkpoints: magic ``V2V3CKPT`` then a count and one record per array.

Each record is a uint32 name length, the UTF-8 name, a uint32 rank, the
uint32 dimensions and a float32 little-endian payload.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import DataError, FormatError, LengthError

MAGIC = b"V2V3CKPT"


def save_checkpoint(path, arrays: dict) -> None:
    parts = [MAGIC, struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        encoded = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<I", len(encoded)) + encoded)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_checkpoint(path) -> dict:
    raw = open(path, "rb").read()
    if raw[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}, expected {MAGIC!r}")
    pos = 8

    def take(n):
        nonlocal pos
        if pos + n > len(raw):
            raise LengthError(f"{path}: truncated checkpoint")
        chunk = raw[pos:pos + n]
        pos += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape, dtype=np.int64))
        arr = np.frombuffer(take(4 * size), dtype="<f4").astype(np.float32).reshape(shape)
        if np.any(np.isnan(arr)):
            raise DataError(f"{path}: NaN in array {name!r}")
        out[name] = arr
    if pos != len(raw):
        raise LengthError(f"{path}: {len(raw) - pos} trailing bytes")
    return out
