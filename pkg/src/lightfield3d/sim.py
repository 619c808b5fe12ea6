"""Synthetic phantoms, measurement simulation and sensor noise."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import data as io
from .data import LightField, PsfStack, Volume
from .errors import ConfigError
from .optics import forward_project
from .psf import PsfConfig, synthesize_psf

PHANTOM_KINDS = ("beads", "filaments", "mixed")


@dataclass(frozen=True)
class PhantomConfig:
    kind: str = "mixed"
    nx: int = 64
    ny: int = 64
    nz: int = 16
    count: int = 12
    lo: float = 0.5
    hi: float = 1.0
    radius: float = 2.0
    thickness: float = 1.0
    length: int = 48
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PHANTOM_KINDS:
            raise ConfigError(f"phantom.kind must be one of {PHANTOM_KINDS}, got {self.kind!r}")
        if self.lo < 0 or self.hi < self.lo:
            raise ConfigError(f"phantom intensity range [{self.lo}, {self.hi}] is invalid")
        if self.count < 1:
            raise ConfigError(f"phantom.count must be >= 1, got {self.count}")
        if min(self.nx, self.ny, self.nz) < 1:
            raise ConfigError("phantom dimensions must be positive")
        if self.radius < 0 or self.thickness < 1:
            raise ConfigError("phantom.radius must be >= 0 and phantom.thickness >= 1")


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float = 0.0
    offset: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"noise.sigma must be >= 0, got {self.sigma}")
        if self.offset < 0:
            raise ConfigError(f"noise.offset must be >= 0, got {self.offset}")


def _paint_ball(vol: np.ndarray, center, radius: float, value: float) -> None:
    """Max-composite a solid ball of voxels within ``radius`` of ``center``."""
    nz, ny, nx = vol.shape
    r = int(math.floor(radius))
    cz, cy, cx = (int(c) for c in center)
    z0, z1 = max(cz - r, 0), min(cz + r + 1, nz)
    y0, y1 = max(cy - r, 0), min(cy + r + 1, ny)
    x0, x1 = max(cx - r, 0), min(cx + r + 1, nx)
    if z0 >= z1 or y0 >= y1 or x0 >= x1:
        return
    zz, yy, xx = np.ogrid[z0:z1, y0:y1, x0:x1]
    mask = (zz - cz) ** 2 + (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
    block = vol[z0:z1, y0:y1, x0:x1]
    np.maximum(block, np.where(mask, value, 0.0), out=block)


def _add_bead(vol, rng, cfg: PhantomConfig) -> None:
    center = (rng.integers(cfg.nz), rng.integers(cfg.ny), rng.integers(cfg.nx))
    _paint_ball(vol, center, cfg.radius, rng.uniform(cfg.lo, cfg.hi))


def _add_filament(vol, rng, cfg: PhantomConfig) -> None:
    value = rng.uniform(cfg.lo, cfg.hi)
    pos = rng.uniform(0, 1, 3) * np.array([cfg.nz, cfg.ny, cfg.nx]) - 0.5
    direction = rng.normal(size=3)
    direction[0] *= 0.3  # keep filaments mostly lateral
    direction /= np.linalg.norm(direction)
    r = (cfg.thickness - 1) / 2
    visited = set()
    for _ in range(2 * cfg.length):
        voxel = tuple(int(v) for v in np.rint(pos))
        if voxel not in visited:
            visited.add(voxel)
            _paint_ball(vol, voxel, r, value)
        direction = direction + rng.normal(scale=0.15, size=3)
        direction /= np.linalg.norm(direction)
        pos = pos + 0.5 * direction


def generate_phantom(cfg: PhantomConfig) -> Volume:
    """Beads are solid balls; filaments are dilated random-walk polylines."""
    rng = np.random.default_rng(cfg.seed)
    vol = np.zeros((cfg.nz, cfg.ny, cfg.nx))
    if cfg.kind == "beads":
        n_beads, n_fil = cfg.count, 0
    elif cfg.kind == "filaments":
        n_beads, n_fil = 0, cfg.count
    else:
        n_beads = (cfg.count + 1) // 2
        n_fil = cfg.count - n_beads
    for _ in range(n_beads):
        _add_bead(vol, rng, cfg)
    for _ in range(n_fil):
        _add_filament(vol, rng, cfg)
    return Volume(vol)


def add_noise(lf: LightField, cfg: NoiseConfig) -> LightField:
    """Add background offset and Gaussian noise, then clip at zero.

    View ``u`` draws from its own generator seeded with ``seed ^ u`` so the
    noise of different views is independent by construction.
    """
    out = np.empty(lf.data.shape, dtype=np.float64)
    for u in range(lf.nu):
        view = lf.data[u].astype(np.float64) + cfg.offset
        if cfg.sigma > 0:
            rng = np.random.default_rng(cfg.seed ^ u)
            view = view + cfg.sigma * rng.standard_normal(view.shape)
        out[u] = np.maximum(view, 0.0)
    return LightField(out.astype(lf.data.dtype))


def format_manifest(entries: dict) -> str:
    return "".join(f"{key} = {value}\n" for key, value in entries.items())


def parse_manifest(text: str) -> dict:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"manifest line without '=': {line!r}")
        out[key.strip()] = value.strip()
    return out


def dataset_from_manifest(entries: dict) -> tuple[PhantomConfig, PsfConfig, NoiseConfig]:
    """Rebuild the three configs recorded in a dataset manifest."""

    def section(prefix, cls):
        kwargs = {}
        for name, default in asdict(cls()).items():
            key = f"{prefix}.{name}"
            if key in entries:
                kwargs[name] = type(default)(entries[key])
        return cls(**kwargs)

    return (
        section("phantom", PhantomConfig),
        section("psf", PsfConfig),
        section("noise", NoiseConfig),
    )


DATASET_FILES = {
    "volume": "volume.vol",
    "clean_lf": "clean.lf",
    "noisy_lf": "noisy.lf",
    "psf": "psf.psf",
}


def make_dataset(phantom_cfg: PhantomConfig, psf_cfg: PsfConfig, noise_cfg: NoiseConfig, out_dir) -> dict:
    """Write ground truth, clean and noisy light fields, PSF and a manifest.

    Everything is computed from the float32 values that end up on disk, so
    re-projecting the stored volume with the stored PSF reproduces the stored
    clean light field exactly.
    """
    if (phantom_cfg.nz != psf_cfg.nz):
        raise ConfigError(f"phantom.nz={phantom_cfg.nz} differs from psf.nz={psf_cfg.nz}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    volume = Volume(generate_phantom(phantom_cfg).data.astype(np.float32))
    psf_f64 = synthesize_psf(psf_cfg)
    psf = PsfStack(psf_f64.data.astype(np.float32), normalized=psf_f64.normalized)
    clean = forward_project(volume, psf)
    noisy = add_noise(clean, noise_cfg)

    paths = {name: out_dir / fname for name, fname in DATASET_FILES.items()}
    io.write_volume(paths["volume"], volume)
    io.write_lightfield(paths["clean_lf"], clean)
    io.write_lightfield(paths["noisy_lf"], noisy)
    io.write_psf(paths["psf"], psf)

    manifest = {f"file.{name}": fname for name, fname in DATASET_FILES.items()}
    for prefix, cfg in (("phantom", phantom_cfg), ("psf", psf_cfg), ("noise", noise_cfg)):
        for name, value in asdict(cfg).items():
            manifest[f"{prefix}.{name}"] = repr(value) if isinstance(value, float) else value
    (out_dir / "manifest.txt").write_text(format_manifest(manifest))
    return manifest
