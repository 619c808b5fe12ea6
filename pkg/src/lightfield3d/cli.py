"""Command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 data/format error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import data as io
from .config import defaults, load_config, section
from .data import LightField, PsfStack, Volume
from .errors import ConfigError, DataError, GeometryError, NumericError
from .metrics import evaluate
from .nn.checkpoint import save_checkpoint
from .optics import forward_project
from .psf import synthesize_psf
from .rld import rld_solve
from .sim import add_noise, generate_phantom, make_dataset
from .v2v.train import TrainResult, fuse, train

log = logging.getLogger("lightfield3d")

SEED_KEYS = ("phantom.seed", "noise.seed", "train.seed")
DTYPES = {"f32": np.float32, "f64": np.float64}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int, help="override every seed key")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="BLAS threads")
    common.add_argument("--precision", choices=sorted(DTYPES), default="f32")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="lightfield3d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("psf-gen", parents=[common], help="synthesize a PSF stack -> psf.psf")
    sub.add_parser("phantom", parents=[common], help="generate a phantom volume -> volume.vol")
    p = sub.add_parser("project", parents=[common], help="forward-project a volume -> clean.lf")
    p.add_argument("--volume", type=Path, required=True)
    p.add_argument("--psf", type=Path, required=True)
    p = sub.add_parser("noise", parents=[common], help="add offset and Gaussian noise -> noisy.lf")
    p.add_argument("--lf", type=Path, required=True)
    p = sub.add_parser("rld", parents=[common], help="Richardson-Lucy reconstruction -> rld.vol")
    p.add_argument("--lf", type=Path, required=True)
    p.add_argument("--psf", type=Path, required=True)
    p = sub.add_parser("train", parents=[common], help="self-supervised reconstruction -> fused.vol")
    p.add_argument("--lf", type=Path, required=True)
    p.add_argument("--psf", type=Path, required=True)
    p = sub.add_parser("fuse", parents=[common], help="average two volumes -> fused.vol")
    p.add_argument("--a", type=Path, required=True)
    p.add_argument("--b", type=Path, required=True)
    p = sub.add_parser("eval", parents=[common], help="PSNR / SSIM report -> report.txt")
    p.add_argument("--recon", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--bg", type=float, help="background level (overrides eval.bg)")
    sub.add_parser("dataset", parents=[common], help="phantom, PSF, clean and noisy light fields")
    return parser


def _load(args) -> dict:
    cfg = load_config(args.config) if args.config else defaults()
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        for key in SEED_KEYS:
            cfg[key] = args.seed
    return cfg


def _cast_psf(p: PsfStack, dtype) -> PsfStack:
    return PsfStack(p.data.astype(dtype), normalized=p.normalized)


def write_loss_log(path, entries) -> None:
    with open(path, "w") as fh:
        fh.write("# step total mse fft dc\n")
        for step, total, mse, fft, dc in entries:
            fh.write(f"{step} {total!r} {mse!r} {fft!r} {dc!r}\n")


def save_training(out: Path, result: TrainResult) -> None:
    arrays = {name: p.value for name, p in result.params.items()}
    arrays["meta.in_scale"] = np.array([result.in_scale])
    arrays["meta.bg_volume"] = np.array([result.bg_volume])
    save_checkpoint(out / "checkpoint.ckpt", arrays)
    io.write_volume(out / "volume_a.vol", result.volume_a)
    io.write_volume(out / "volume_b.vol", result.volume_b)
    io.write_volume(out / "fused.vol", result.fused)
    write_loss_log(out / "loss_log.txt", result.loss_log)


def run(args) -> None:
    cfg = _load(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    dtype = DTYPES[args.precision]
    cmd = args.command

    if cmd == "psf-gen":
        io.write_psf(out / "psf.psf", synthesize_psf(section(cfg, "psf")))
    elif cmd == "phantom":
        io.write_volume(out / "volume.vol", generate_phantom(section(cfg, "phantom")))
    elif cmd == "project":
        vol = io.read_volume(args.volume)
        psf = io.read_psf(args.psf)
        lf = forward_project(Volume(vol.data.astype(dtype)), _cast_psf(psf, dtype))
        io.write_lightfield(out / "clean.lf", lf)
    elif cmd == "noise":
        io.write_lightfield(out / "noisy.lf", add_noise(io.read_lightfield(args.lf), section(cfg, "noise")))
    elif cmd == "rld":
        lf = io.read_lightfield(args.lf)
        psf = _cast_psf(io.read_psf(args.psf), dtype)
        vol, loglik = rld_solve(LightField(lf.data.astype(dtype)), psf, section(cfg, "rld"))
        io.write_volume(out / "rld.vol", vol)
        (out / "rld_log.txt").write_text("".join(f"{i + 1} {v!r}\n" for i, v in enumerate(loglik)))
    elif cmd == "train":
        lf = io.read_lightfield(args.lf)
        psf = io.read_psf(args.psf)
        tcfg = section(cfg, "train")

        def progress(step, entry):
            if step == 1 or step % 100 == 0 or step == tcfg.steps:
                log.info("step %d/%d total %.6g", step, tcfg.steps, entry[1])

        result = train(lf, _cast_psf(psf, dtype), tcfg, dtype=dtype, progress=progress)
        save_training(out, result)
    elif cmd == "fuse":
        io.write_volume(out / "fused.vol", fuse(io.read_volume(args.a), io.read_volume(args.b)))
    elif cmd == "eval":
        bg = args.bg if args.bg is not None else section(cfg, "eval")["bg"]
        report = evaluate(io.read_volume(args.recon), io.read_volume(args.gt), bg)
        text = report.to_text()
        (out / "report.txt").write_text(text)
        sys.stdout.write(text)
    elif cmd == "dataset":
        make_dataset(section(cfg, "phantom"), section(cfg, "psf"), section(cfg, "noise"), out)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        with threadpool_limits(limits=max(args.threads, 1)):
            run(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, GeometryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
