"""Command line: directory runners for demosaicking and 2x upsampling,
CSV/Markdown metric reports, and the numerical self-test.

Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 failed
self-test.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import selftest
from .imaging import (
    BAYER_LAYOUTS,
    bicubic_upsample,
    bilinear_demosaic,
    downsample2x,
    luma,
    mosaic,
    psnr,
    read_png,
    read_ppm,
    ssim,
    write_ppm,
)
from .pipeline import (
    BlockConfig,
    import_params,
    run_blocks,
    run_tiled,
    task_from_lowres,
    task_from_mosaic,
)

log = logging.getLogger("graphinterp")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SELFTEST = 0, 1, 2, 3

_CSV_SCHEMA = "file,method,blocks,psnr,ssim,seconds"
_READABLE = (".ppm", ".pgm", ".pnm", ".png")

# timing source; tests pin this to make reports byte-stable
_now = time.perf_counter


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunRow:
    file: str
    method: str
    blocks: int
    psnr: float
    ssim: float
    seconds: float
    extra: dict = field(default_factory=dict)


@dataclass
class RunReport:
    """Per-image rows plus dataset aggregates (plain means over rows)."""

    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # (file, message)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r.psnr for r in self.rows])) if self.rows else math.nan

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r.ssim for r in self.rows])) if self.rows else math.nan


def _fmt_metric(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.4f}"


def format_csv(report: RunReport) -> str:
    buf = io.StringIO()
    buf.write(f"# graphinterp report v1: {_CSV_SCHEMA}\r\n")
    writer = csv.writer(buf)
    writer.writerow(_CSV_SCHEMA.split(","))
    for r in report.rows:
        writer.writerow(
            [r.file, r.method, r.blocks, _fmt_metric(r.psnr), _fmt_metric(r.ssim),
             f"{r.seconds:.4f}"]
        )
    for name, message in report.errors:
        buf.write(f"# skipped {name}: {message}\r\n")
    if report.rows:
        buf.write(f"# mean_psnr = {_fmt_metric(report.mean_psnr)}\r\n")
        buf.write(f"# mean_ssim = {_fmt_metric(report.mean_ssim)}\r\n")
    return buf.getvalue()


def format_markdown(report: RunReport) -> str:
    extras = sorted({k for r in report.rows for k in r.extra})
    head = ["File", "Method", "Blocks", "PSNR", "SSIM", "Seconds"] + extras
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in report.rows:
        cells = [r.file, r.method, str(r.blocks), _fmt_metric(r.psnr),
                 _fmt_metric(r.ssim), f"{r.seconds:.4f}"]
        cells += [_fmt_metric(r.extra[k]) if k in r.extra else "" for k in extras]
        lines.append("| " + " | ".join(cells) + " |")
    if report.rows:
        mean = ["**mean**", "", "", _fmt_metric(report.mean_psnr),
                _fmt_metric(report.mean_ssim), ""] + [""] * len(extras)
        lines.append("| " + " | ".join(mean) + " |")
    for name, message in report.errors:
        lines.append(f"_skipped {name}: {message}_")
    return "\n".join(lines) + "\n"


def _write_report(report: RunReport, path) -> None:
    path = Path(path)
    text = format_markdown(report) if path.suffix.lower() == ".md" else format_csv(report)
    path.write_text(text)


def _read_image(path: Path) -> np.ndarray:
    if path.suffix.lower() == ".png":
        return read_png(path)
    return read_ppm(path)


def _center_crop(img, crop):
    if crop is None:
        return img
    ch, cw = crop
    h, w = img.shape[:2]
    ch, cw = min(ch, h), min(cw, w)
    r0, c0 = (h - ch) // 2, (w - cw) // 2
    return img[r0 : r0 + ch, c0 : c0 + cw]


def _list_images(in_dir: Path):
    if not in_dir.is_dir():
        raise OSError(f"input directory not found: {in_dir}")
    return sorted(p for p in in_dir.iterdir() if p.suffix.lower() in _READABLE)


def _interp_output(task, cfg: BlockConfig, tile):
    if tile:
        return run_tiled(task, cfg, tile=tile)
    return run_blocks(task, cfg)


def cmd_demosaic(in_dir, out_dir, method, cfg: BlockConfig, report_path=None, *,
                 bayer="RGGB", crop=None, tile=None) -> RunReport:
    """Mosaic each image, reconstruct with the chosen method, score it.

    Headline PSNR pools the channel MSEs; the per-channel mean appears as
    an extra report column.  SSIM is the channel mean.
    """
    if method not in ("bilinear", "iglr", "igtv"):
        raise UsageError(f"unknown demosaic method {method!r}")
    if bayer not in BAYER_LAYOUTS:
        raise UsageError(f"unknown Bayer pattern {bayer!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport()
    files = _list_images(Path(in_dir))
    if not files:
        log.warning("no readable images in %s", in_dir)
    for path in files:
        t0 = _now()
        try:
            img = _read_image(path)
            if img.ndim != 3:
                raise ValueError("demosaicking needs color ground truth")
            img = _center_crop(img, crop)
            obs = mosaic(img, bayer)
            if method == "bilinear":
                out = bilinear_demosaic(obs)
            else:
                out = _interp_output(task_from_mosaic(obs), cfg, tile)
            seconds = _now() - t0
            chan_psnr = [psnr(img[..., c], out[..., c]) for c in range(3)]
            row = RunRow(
                file=path.name,
                method=method,
                blocks=cfg.blocks if method != "bilinear" else 0,
                psnr=psnr(img, out),
                ssim=float(np.mean([ssim(img[..., c], out[..., c]) for c in range(3)])),
                seconds=seconds,
                extra={"psnr_channel_mean": float(np.mean(chan_psnr))},
            )
            report.rows.append(row)
            write_ppm(out_dir / f"{path.stem}_{method}.ppm", out)
            log.info("%s: psnr=%s ssim=%s", path.name, _fmt_metric(row.psnr),
                     _fmt_metric(row.ssim))
        except (OSError, ValueError, RuntimeError) as exc:
            report.errors.append((path.name, str(exc)))
            log.warning("skipped %s: %s", path.name, exc)
    if report_path:
        _write_report(report, report_path)
    return report


def cmd_interp2x(in_dir, out_dir, method, cfg: BlockConfig, report_path=None, *,
                 crop=None, tile=None) -> RunReport:
    """Downsample 2x (no prefilter), upsample back, score on the luma plane."""
    if method not in ("bicubic", "iglr", "igtv"):
        raise UsageError(f"unknown interpolation method {method!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport()
    files = _list_images(Path(in_dir))
    if not files:
        log.warning("no readable images in %s", in_dir)
    for path in files:
        t0 = _now()
        try:
            img = _center_crop(_read_image(path), crop)
            h, w = img.shape[:2]
            lr, sampling = downsample2x(img)
            if method == "bicubic":
                out = np.clip(bicubic_upsample(lr, out_shape=(h, w)), 0.0, 255.0)
            else:
                out = _interp_output(task_from_lowres(lr, sampling, (h, w)), cfg, tile)
            seconds = _now() - t0
            row = RunRow(
                file=path.name,
                method=method,
                blocks=cfg.blocks if method != "bicubic" else 0,
                psnr=psnr(luma(img), luma(out)),
                ssim=ssim(luma(img), luma(out)),
                seconds=seconds,
            )
            report.rows.append(row)
            write_ppm(out_dir / f"{path.stem}_{method}.ppm", out)
            log.info("%s: psnr=%s ssim=%s", path.name, _fmt_metric(row.psnr),
                     _fmt_metric(row.ssim))
        except (OSError, ValueError, RuntimeError) as exc:
            report.errors.append((path.name, str(exc)))
            log.warning("skipped %s: %s", path.name, exc)
    if report_path:
        _write_report(report, report_path)
    return report


def cmd_selftest(level="fast", seed=0) -> int:
    """Run the check suites; one line per check plus a JSON summary."""
    results, ok = selftest.run(level, seed=seed)
    for r in results:
        print(("ok   " if r.ok else "FAIL ") + f"{r.name}: {r.detail}")
    print(json.dumps({
        "level": level,
        "seed": seed,
        "passed": sum(r.ok for r in results),
        "failed": sum(not r.ok for r in results),
    }))
    return EXIT_OK if ok else EXIT_SELFTEST


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_crop(text):
    parts = text.lower().split("x")
    if len(parts) != 2 or not all(p.isdigit() and int(p) > 0 for p in parts):
        raise UsageError(f"--crop expects HxW, got {text!r}")
    return int(parts[0]), int(parts[1])


def build_parser() -> _Parser:
    parser = _Parser(prog="graphinterp", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="parameter text file (key = value lines)")
    common.add_argument("--method", help="reconstruction method")
    common.add_argument("--blocks", type=int, help="number of solver blocks")
    common.add_argument("--window", type=int, help="window radius for the pixel graph")
    common.add_argument("--gamma", type=float, help="augmented-Lagrangian weight")
    common.add_argument("--admm-iters", type=int, help="ADMM iterations per block")
    common.add_argument("--cg-iters", type=int, help="inner CG iterations")
    common.add_argument("--crop", help="center crop HxW before processing")
    common.add_argument("--bayer", default="RGGB", help="Bayer pattern (RGGB/BGGR/GRBG/GBRG)")
    common.add_argument("--report", help="report path (.csv or .md)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    common.add_argument("--tile", type=int, help="process in tiles of this size")
    sub = parser.add_subparsers(dest="command", required=True)
    p_dem = sub.add_parser("demosaic", parents=[common],
                           help="Bayer-sample and reconstruct a directory of images")
    p_dem.add_argument("input_dir")
    p_dem.add_argument("output_dir")
    p_int = sub.add_parser("interp2x", parents=[common],
                           help="2x downsample and re-interpolate a directory of images")
    p_int.add_argument("input_dir")
    p_int.add_argument("output_dir")
    p_self = sub.add_parser("selftest", parents=[common], help="run the numerical check suites")
    p_self.add_argument("level", nargs="?", default="fast", choices=("fast", "full"))
    return parser


def _config_from_args(args, base_method: str) -> BlockConfig:
    cfg = BlockConfig(method=base_method)
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise OSError(f"cannot read config: {exc}") from exc
        try:
            cfg = import_params(text, base=cfg)
        except ValueError as exc:
            raise UsageError(f"bad config file: {exc}") from exc
    overrides = {}
    for key in ("blocks", "window", "gamma", "cg_iters"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.admm_iters is not None:
        overrides["admm_iters"] = args.admm_iters
    try:
        return replace(cfg, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _resolve(args, baseline: str):
    """Map --method/--config onto (run method name, BlockConfig)."""
    method = args.method
    cfg = _config_from_args(args, "gtv")
    if method is None:
        method = {"gtv": "igtv", "glr": "iglr"}[cfg.method]
    elif method == "iglr":
        cfg = replace(cfg, method="glr")
    elif method == "igtv":
        cfg = replace(cfg, method="gtv")
    elif method != baseline:
        raise UsageError(f"unknown method {method!r}")
    return method, cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        crop = _parse_crop(args.crop) if getattr(args, "crop", None) else None
        if args.command == "selftest":
            return cmd_selftest(args.level, seed=args.seed)
        if args.command == "demosaic":
            method, cfg = _resolve(args, "bilinear")
            report = cmd_demosaic(args.input_dir, args.output_dir, method, cfg,
                                  report_path=args.report, bayer=args.bayer,
                                  crop=crop, tile=args.tile)
        else:
            method, cfg = _resolve(args, "bicubic")
            report = cmd_interp2x(args.input_dir, args.output_dir, method, cfg,
                                  report_path=args.report, crop=crop, tile=args.tile)
        sys.stdout.write(format_markdown(report))
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
