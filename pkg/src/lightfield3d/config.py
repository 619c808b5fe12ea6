"""Flat ``key = value`` configuration with dotted section prefixes.

Every key belongs to one of the sections below and takes the type of its
default.  Unknown keys and malformed values are rejected with the offending
key named.  ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import ConfigError
from .psf import PsfConfig
from .rld import RldConfig
from .sim import NoiseConfig, PhantomConfig
from .v2v.model import V2vConfig

SECTIONS = {
    "psf": PsfConfig,
    "phantom": PhantomConfig,
    "noise": NoiseConfig,
    "rld": RldConfig,
    "train": V2vConfig,
    "eval": None,
}
EVAL_DEFAULTS = {"bg": 0.0}

KEY_DOCS = {
    "psf.nu": "number of views (view 0 axial, the rest on a ring)",
    "psf.k": "odd kernel side length in pixels",
    "psf.nz": "number of depth planes",
    "psf.z_focal": "focal depth index (may be fractional)",
    "psf.ring_radius_tan": "tangent of the ring illumination angle",
    "psf.shift_scale": "lateral shift in pixels per unit of tan * (z - z_focal)",
    "psf.sigma0": "in-focus Gaussian std in pixels",
    "psf.sigma_slope": "std growth in pixels per depth step from focus",
    "phantom.kind": "beads | filaments | mixed",
    "phantom.nx": "volume width",
    "phantom.ny": "volume height",
    "phantom.nz": "volume depth (must equal psf.nz for datasets)",
    "phantom.count": "number of objects",
    "phantom.lo": "minimum object intensity",
    "phantom.hi": "maximum object intensity",
    "phantom.radius": "bead radius in voxels",
    "phantom.thickness": "filament thickness in voxels",
    "phantom.length": "filament length in voxels",
    "phantom.seed": "phantom RNG seed",
    "noise.sigma": "Gaussian noise std in intensity units",
    "noise.offset": "additive sensor background level",
    "noise.seed": "noise RNG seed; view u uses seed ^ u",
    "rld.iterations": "number of Richardson-Lucy updates",
    "rld.epsilon": "division guard",
    "rld.init": "uniform | backproject",
    "train.enc_channels": "feature channels of the shared view encoder",
    "train.enc_layers": "convolution layers in the encoder",
    "train.dec_levels": "U-Net scales in each decoder",
    "train.dec_width": "channels at the finest decoder scale",
    "train.final_activation": "relu",
    "train.alpha": "weight of the frequency-domain loss",
    "train.beta": "weight of the below-background penalty",
    "train.fft_mode": "l2 | l1",
    "train.steps": "optimizer steps",
    "train.lr": "Adam learning rate",
    "train.seed": "weight initialization seed",
    "train.bg_override": "voxel background level for the penalty, or none to estimate",
    "train.use_split": "train on disjoint view subsets (false: every view is input and target)",
    "train.use_align": "apply centroid-kernel alignment (false: zero offsets)",
    "eval.bg": "background subtracted from both volumes before metrics",
}


def defaults() -> dict:
    out = {}
    for section, cls in SECTIONS.items():
        fields = EVAL_DEFAULTS if cls is None else dataclasses.asdict(cls())
        for name, value in fields.items():
            out[f"{section}.{name}"] = value
    return out


def _coerce(key: str, raw: str, default):
    text = raw.strip()
    try:
        if key == "train.bg_override":
            return None if text.lower() in ("none", "") else float(text)
        if isinstance(default, bool):
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {type(default).__name__}") from None


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse config text into a full mapping of every key (defaults filled in)."""
    cfg = defaults()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if key not in cfg:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate config key {key!r}")
        seen.add(key)
        cfg[key] = _coerce(key, value, cfg[key])
    return cfg


def load_config(path) -> dict:
    return parse_config(Path(path).read_text(), source=str(path))


def format_config(cfg: dict) -> str:
    lines = []
    for key, value in cfg.items():
        lines.append(f"{key} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"


def section(cfg: dict, name: str):
    """Build the config dataclass of one section."""
    cls = SECTIONS[name]
    prefix = name + "."
    kwargs = {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}
    if cls is None:
        return kwargs
    return cls(**kwargs)
