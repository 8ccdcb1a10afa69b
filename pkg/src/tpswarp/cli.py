"""Batch command-line front end.

Subcommands
-----------
warp
    Warp one image from its landmark frame onto a target frame.
field
    Solve the same warp but write only the sampling field as a TPSF file.
align-pair
    Produce both warped images and both fields for a portrait/style pair.
eval-dist
    Mean cosine distance between two embedding files.
bench
    Time field rasterization plus warping at a given resolution.
kernel
    Run one named array operation, or a batch manifest of them, against
    files on disk.  This is the surface external bindings script.

JSON results go to standard out, diagnostics to standard error.  Exit code
2 flags input or format problems, 3 degenerate geometry.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import FormatError, GeometryError
from .kernels import run_kernel_op, run_manifest
from .landmarks import load_landmarks
from .pipeline import align_style_to_portrait, build_warp
from .sampler import FeatureMap, warp_image
from .tensorio import read_tensor
from .losses import embedding_cosine_distance
from .tps import solve_tps
from .warp_field import rasterize_group_field, write_field


@dataclass(frozen=True)
class BenchReport:
    """Timing summary of repeated rasterize-and-warp runs."""

    image_size: int
    iterations: int
    mean_ms: float
    p50_ms: float
    p95_ms: float
    throughput_fps: float

    def __post_init__(self) -> None:
        if self.p50_ms > self.p95_ms:
            raise ValueError(f"p50 {self.p50_ms} exceeds p95 {self.p95_ms}")
        expected = 1000.0 / self.mean_ms
        if not math.isclose(self.throughput_fps, expected, rel_tol=0.01):
            raise ValueError(
                f"throughput {self.throughput_fps} inconsistent with mean {self.mean_ms} ms"
            )


def _load_image(path) -> FeatureMap:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            if img.mode == "L":
                arr = np.asarray(img, dtype=np.float64)[None, :, :]
            else:
                if img.mode not in ("RGB", "RGBA"):
                    has_alpha = "A" in img.mode or "transparency" in img.info
                    img = img.convert("RGBA" if has_alpha else "RGB")
                arr = np.asarray(img, dtype=np.float64).transpose(2, 0, 1)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a readable image: {exc}") from exc
    return FeatureMap(values=arr / 255.0)


def _save_image(image: FeatureMap, path) -> None:
    from PIL import Image

    modes = {1: "L", 3: "RGB", 4: "RGBA"}
    if image.channels not in modes:
        raise ValueError(f"cannot save a {image.channels}-channel image as PNG")
    data = np.clip(image.values, 0.0, 1.0) * 255.0
    data = np.rint(data).astype(np.uint8)
    if image.channels == 1:
        pixels = data[0]
    else:
        pixels = data.transpose(1, 2, 0)
    Image.fromarray(pixels, mode=modes[image.channels]).save(path, format="PNG")


def _cmd_warp(args) -> int:
    source_lm = load_landmarks(args.from_landmarks)
    target_lm = load_landmarks(args.to_landmarks)
    image = _load_image(args.image)
    if image.height != source_lm.height or image.width != source_lm.width:
        raise ValueError(
            f"{args.image} is {image.height}x{image.width} but {args.from_landmarks} "
            f"claims {source_lm.height}x{source_lm.width}"
        )
    field = build_warp(
        source_lm,
        target_lm,
        target_lm.height,
        target_lm.width,
        mode=args.mode,
        threads=args.threads,
    )
    warped = warp_image(image, field, border=args.border, threads=args.threads)
    _save_image(warped, args.out)
    return 0


def _cmd_field(args) -> int:
    source_lm = load_landmarks(args.from_landmarks)
    target_lm = load_landmarks(args.to_landmarks)
    field = build_warp(
        source_lm,
        target_lm,
        args.height if args.height is not None else target_lm.height,
        args.width if args.width is not None else target_lm.width,
        mode=args.mode,
        threads=args.threads,
    )
    write_field(field, args.out)
    return 0


def _cmd_align_pair(args) -> int:
    portrait_lm = load_landmarks(args.portrait_landmarks)
    style_lm = load_landmarks(args.style_landmarks)
    portrait = _load_image(args.portrait)
    style = _load_image(args.style)
    for name, image, lm in (
        (args.portrait, portrait, portrait_lm),
        (args.style, style, style_lm),
    ):
        if image.height != lm.height or image.width != lm.width:
            raise ValueError(
                f"{name} is {image.height}x{image.width} but its landmarks "
                f"claim {lm.height}x{lm.width}"
            )
    os.makedirs(args.out_dir, exist_ok=True)
    style_to_portrait = align_style_to_portrait(
        style, style_lm, portrait_lm, mode=args.mode, border=args.border, threads=args.threads
    )
    portrait_to_style = align_style_to_portrait(
        portrait, portrait_lm, style_lm, mode=args.mode, border=args.border, threads=args.threads
    )
    _save_image(style_to_portrait.warped_image, os.path.join(args.out_dir, "style_warped.png"))
    _save_image(
        portrait_to_style.warped_image, os.path.join(args.out_dir, "portrait_warped.png")
    )
    write_field(style_to_portrait.field, os.path.join(args.out_dir, "style_to_portrait.tpsf"))
    write_field(portrait_to_style.field, os.path.join(args.out_dir, "portrait_to_style.tpsf"))
    return 0


def _cmd_eval_dist(args) -> int:
    a = read_tensor(args.embeddings_a)
    b = read_tensor(args.embeddings_b)
    for name, arr in ((args.embeddings_a, a), (args.embeddings_b, b)):
        if arr.ndim != 2:
            raise ValueError(f"{name}: embeddings must be rank 2, got rank {arr.ndim}")
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"embedding counts differ: {a.shape[0]} in {args.embeddings_a}, "
            f"{b.shape[0]} in {args.embeddings_b}"
        )
    distance = embedding_cosine_distance(a, b)
    json.dump({"mean_cosine_distance": distance}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _bench_transform(rng: np.random.Generator):
    xs = np.linspace(-0.7, 0.7, 4)
    ys = np.linspace(-0.7, 0.7, 3)
    grid = np.array([(x, y) for y in ys for x in xs])[:10]
    points = grid + rng.uniform(-0.15, 0.15, grid.shape)
    values = points + rng.uniform(-0.08, 0.08, points.shape)
    return solve_tps(points, values)


def _cmd_bench(args) -> int:
    if args.size < 32:
        raise ValueError(f"--size must be >= 32, got {args.size}")
    if args.iters < 10:
        raise ValueError(f"--iters must be >= 10, got {args.iters}")
    rng = np.random.default_rng(args.seed)
    transform = _bench_transform(rng)
    image = FeatureMap(values=rng.random((3, args.size, args.size)))

    def step():
        field = rasterize_group_field(transform, args.size, args.size, threads=args.threads)
        return field, warp_image(image, field, threads=args.threads)

    for _ in range(3):
        field, warped = step()
    times = np.empty(args.iters)
    for i in range(args.iters):
        start = time.perf_counter()
        field, warped = step()
        times[i] = (time.perf_counter() - start) * 1000.0

    digest = hashlib.sha256()
    digest.update(field.coords.astype("<f4").tobytes())
    digest.update(warped.values.astype("<f4").tobytes())
    mean_ms = float(times.mean())
    report = BenchReport(
        image_size=args.size,
        iterations=args.iters,
        mean_ms=mean_ms,
        p50_ms=float(np.percentile(times, 50)),
        p95_ms=float(np.percentile(times, 95)),
        throughput_fps=1000.0 / mean_ms,
    )
    payload = {
        "image_size": report.image_size,
        "iterations": report.iterations,
        "mean_ms": report.mean_ms,
        "p50_ms": report.p50_ms,
        "p95_ms": report.p95_ms,
        "throughput_fps": report.throughput_fps,
        "threads": args.threads,
        "seed": args.seed,
        "output_sha256": digest.hexdigest(),
    }
    json.dump(payload, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _parse_params(pairs) -> dict:
    params = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValueError(f"parameter '{pair}' is not of the form key=value")
        key, _, value = pair.partition("=")
        params[key] = value
    return params


def _cmd_kernel(args) -> int:
    if args.manifest is not None:
        result = run_manifest(args.manifest)
    else:
        if args.op is None:
            raise ValueError("kernel needs either --op or --manifest")
        if args.out_dir is None:
            raise ValueError("--out-dir is required with --op")
        result = run_kernel_op(args.op, args.input or [], _parse_params(args.param), args.out_dir)
    json.dump(result, sys.stdout)
    sys.stdout.write("\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpswarp",
        description="Landmark-driven thin-plate-spline image alignment.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--mode", choices=("global", "grouped"), default="global")
        p.add_argument("--border", choices=("clamp", "zeros"), default="clamp")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    warp = sub.add_parser("warp", help="warp one image between landmark frames")
    warp.add_argument("--image", required=True)
    warp.add_argument("--from-landmarks", required=True)
    warp.add_argument("--to-landmarks", required=True)
    warp.add_argument("--out", required=True)
    add_common(warp)
    warp.set_defaults(func=_cmd_warp)

    field = sub.add_parser("field", help="export a warp field without warping an image")
    field.add_argument("--from-landmarks", required=True)
    field.add_argument("--to-landmarks", required=True)
    field.add_argument("--out", required=True)
    field.add_argument("--height", type=int, default=None, help="rows; default target canvas")
    field.add_argument("--width", type=int, default=None, help="columns; default target canvas")
    field.add_argument("--mode", choices=("global", "grouped"), default="global")
    field.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    field.set_defaults(func=_cmd_field)

    pair = sub.add_parser("align-pair", help="align a portrait/style pair both ways")
    pair.add_argument("--portrait", required=True)
    pair.add_argument("--style", required=True)
    pair.add_argument("--portrait-landmarks", required=True)
    pair.add_argument("--style-landmarks", required=True)
    pair.add_argument("--out-dir", required=True)
    add_common(pair)
    pair.set_defaults(func=_cmd_align_pair)

    dist = sub.add_parser("eval-dist", help="mean cosine distance between embedding files")
    dist.add_argument("--embeddings-a", required=True)
    dist.add_argument("--embeddings-b", required=True)
    dist.set_defaults(func=_cmd_eval_dist)

    bench = sub.add_parser("bench", help="time rasterize-plus-warp at a resolution")
    bench.add_argument("--size", type=int, default=256)
    bench.add_argument("--iters", type=int, default=50)
    bench.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    bench.add_argument("--seed", type=int, default=0)
    bench.set_defaults(func=_cmd_bench)

    kernel = sub.add_parser("kernel", help="run serialized array operations")
    kernel.add_argument("--op", choices=None, default=None, help="operation name")
    kernel.add_argument(
        "-i", "--input", action="append", help="input file (.tnsr, .tpsf, or .json); repeatable"
    )
    kernel.add_argument(
        "-p", "--param", action="append", help="key=value operation parameter; repeatable"
    )
    kernel.add_argument("--out-dir", help="directory for output files")
    kernel.add_argument("--manifest", help="batch manifest JSON; overrides --op")
    kernel.set_defaults(func=_cmd_kernel)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GeometryError as exc:
        print(f"tpswarp: {exc}", file=sys.stderr)
        return 3
    except (FormatError, OSError, ValueError) as exc:
        print(f"tpswarp: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
