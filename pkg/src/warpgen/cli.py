"""Command-line front door: generate, rectify, eval-iou, inspect, bench.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .compositor import load_image, rectify, save_image
from .errors import WarpgenError
from .geometry import Homography, QuadStatus, matrix_from_quad, quad_from_matrix, validate_quad
from .metrics import evaluate, read_annotations, read_predictions, write_report
from .pipeline import (
    SourceSet,
    bench_generate,
    generate_dataset,
    load_config,
    read_manifest,
)
from .sampling import GenConfig


def _size(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {value!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("size must be at least 1x1")
    return w, h


def _values(text: str, n: int, what: str) -> np.ndarray:
    parts = text.replace(",", " ").split()
    if len(parts) != n:
        raise WarpgenError(f"expected {n} {what} values, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise WarpgenError(f"non-numeric {what} value") from exc


def _load_run_config(args) -> tuple[GenConfig, SourceSet | None]:
    if getattr(args, "config", None):
        return load_config(args.config)
    return GenConfig(), None


def cmd_generate(args) -> int:
    cfg, sources = _load_run_config(args)
    if args.seed is not None:
        cfg.seed = args.seed
    fg = Path(args.fg) if args.fg else (sources.foreground_dir if sources else None)
    bg = Path(args.bg) if args.bg else (sources.background_dir if sources else None)
    if fg is None or bg is None:
        raise WarpgenError("foreground/background dirs required (--fg/--bg or config sources)")
    summary = generate_dataset(SourceSet(fg, bg), args.n, args.out, cfg, workers=args.workers)
    print(
        f"generated {summary.written}/{summary.requested} samples"
        f" ({len(summary.skipped)} skipped) in {summary.elapsed:.2f}s"
        f" [{summary.samples_per_second:.1f} samples/s] -> {summary.out_dir}"
    )
    return 0


def _rectify_transform(args) -> Homography:
    if args.matrix is not None:
        return Homography(_values(args.matrix, 8, "matrix"))
    quad = _values(args.quad, 8, "quad").reshape(4, 2)
    return matrix_from_quad(quad)


def cmd_rectify(args) -> int:
    photo = load_image(args.photo)
    transform = _rectify_transform(args)
    if args.size is not None:
        out_w, out_h = args.size
    else:
        out_h, out_w = photo.shape[:2]
    save_image(args.out, rectify(photo, transform, out_w, out_h))
    print(f"rectified {args.photo} -> {args.out} ({out_w}x{out_h})")
    return 0


def cmd_eval_iou(args) -> int:
    predictions = read_predictions(args.pred)
    annotations = read_annotations(args.truth)
    report = evaluate(predictions, annotations)
    print(f"samples: {report.n}")
    print(f"mean IoU (95% CI): {report.summary()}")
    if args.json:
        write_report(args.json, report)
    return 0


def cmd_inspect(args) -> int:
    manifest = Path(args.manifest)
    records = read_manifest(manifest)
    root = manifest.parent
    problems = []
    screens = 0
    for r in records:
        if not (root / r.photo_path).is_file():
            problems.append(f"{r.seed_index}: missing photo {r.photo_path}")
            continue
        try:
            status = validate_quad(quad_from_matrix(r.transform()))
        except WarpgenError as exc:
            problems.append(f"{r.seed_index}: bad theta ({exc})")
            continue
        if status is not QuadStatus.VALID:
            problems.append(f"{r.seed_index}: quad is {status.value}")
        screens += r.screen_used
    print(f"records: {len(records)}  with_screen: {screens}  problems: {len(problems)}")
    for p in problems:
        print(f"  {p}", file=sys.stderr)
    return 1 if problems else 0


def cmd_bench(args) -> int:
    cfg = GenConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.width, cfg.height = args.size
    result = bench_generate(cfg, args.n, workers=args.workers)
    print(
        f"generated {result.n} samples in {result.elapsed:.2f}s"
        f" [{result.samples_per_second:.1f} samples/s]"
        f" ({args.size[0]}x{args.size[1]}, workers={args.workers})"
    )
    total = sum(result.step_seconds.values())
    for name, seconds in sorted(result.step_seconds.items(), key=lambda kv: -kv[1]):
        share = 100.0 * seconds / total if total else 0.0
        print(f"  {name:<10} {seconds * 1000.0 / result.n:7.2f} ms/sample  {share:5.1f}%")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpgen",
        description="Synthesize projective-warped photo training samples, "
        "rectify photos, and score rectification quality.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a dataset of photos plus a manifest")
    p.add_argument("--fg", help="directory of flat source images")
    p.add_argument("--bg", help="directory of background images")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="JSON run config (flags win over it)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rectify", help="inverse-warp a photo by a known transform")
    p.add_argument("--photo", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--matrix", help="8 transform parameters, row-major")
    group.add_argument("--quad", help="8 vertex coordinates (x0 y0 ... x3 y3), normalized")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=_size, default=None, help="output WxH (default: photo size)")
    p.set_defaults(func=cmd_rectify)

    p = sub.add_parser("eval-iou", help="score predicted regions against annotations")
    p.add_argument("--pred", required=True, help="photo_id + 8 matrix parameters per line")
    p.add_argument("--truth", required=True, help="photo_id + 8 vertex coordinates per line")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval_iou)

    p = sub.add_parser("inspect", help="validate a manifest and its photo files")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bench", help="in-memory generation benchmark")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--size", type=_size, default=(224, 224))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (WarpgenError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
