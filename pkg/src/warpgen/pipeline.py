"""End-to-end synthesis: the four-step sample assembly, parallel dataset
generation with a line-per-sample manifest, infinite streaming, and an
in-memory benchmark.

Determinism is a hard contract: every sample is a pure function of
(seed, sample_index, config, sources), so output is byte-identical for any
worker count.  Workers own disjoint index spans; the manifest is written by
the parent, ordered by index.
"""
from __future__ import annotations

import json
import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import cv2
import numpy as np

from .compositor import composite, encode_jpeg, load_image, resample, synthesize_screen, warp
from .errors import ConfigError
from .geometry import Homography, compose, invert
from .imgio import IMAGE_SUFFIXES
from .perturb import apply_perturbations_traced
from .sampling import GenConfig, rng_for_sample, sample_screen, sample_transform, screen_matrix

logger = logging.getLogger(__name__)

PHOTO_QUALITY = 95
MANIFEST_NAME = "manifest"


@dataclass(frozen=True)
class SampleRecord:
    """One manifest line tying a photo to its ground truth."""

    photo_path: str
    theta: tuple[float, ...]
    source_path: str
    screen_used: bool
    seed_index: int

    def transform(self) -> Homography:
        return Homography(np.array(self.theta))

    def to_json(self) -> str:
        return json.dumps(
            {
                "photo_path": self.photo_path,
                "theta": list(self.theta),
                "source_path": self.source_path,
                "screen_used": self.screen_used,
                "seed_index": self.seed_index,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "SampleRecord":
        d = json.loads(line)
        return cls(
            photo_path=d["photo_path"],
            theta=tuple(float(v) for v in d["theta"]),
            source_path=d["source_path"],
            screen_used=bool(d["screen_used"]),
            seed_index=int(d["seed_index"]),
        )


@dataclass(frozen=True)
class SourceSet:
    """Directories of flat source images and background images."""

    foreground_dir: Path
    background_dir: Path

    def foregrounds(self) -> list[Path]:
        return _list_images(self.foreground_dir)

    def backgrounds(self) -> list[Path]:
        return _list_images(self.background_dir)


def _list_images(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


@dataclass
class GeneratedSample:
    photo: np.ndarray
    transform: Homography
    screen_used: bool
    jpeg_bytes: bytes | None


def _synthesize(fg, bg, rng, cfg: GenConfig, timings=None) -> GeneratedSample:
    """Four steps: screen synthesis, projective transform, background,
    perturbations.  The returned transform maps the canonical frame onto
    the foreground's quad in the photo whether or not a screen was used
    (the staged image is warped by M . M_screen^-1)."""
    t_prev = time.perf_counter()

    def tick(name):
        nonlocal t_prev
        if timings is not None:
            now = time.perf_counter()
            timings[name] = timings.get(name, 0.0) + (now - t_prev)
            t_prev = now

    screen = sample_screen(rng, cfg)
    if screen is not None:
        staged = synthesize_screen(fg, screen)
    else:
        staged = fg
    tick("screen")

    _, transform = sample_transform(rng, cfg)
    warp_transform = (
        compose(transform, invert(screen_matrix(screen))) if screen is not None else transform
    )
    tick("sample")

    foreground, mask = warp(staged, warp_transform, cfg.width, cfg.height)
    tick("warp")

    combined = composite(foreground, mask, resample(bg, cfg.width, cfg.height))
    tick("composite")

    photo, trace = apply_perturbations_traced(combined, rng, cfg.perturb)
    tick("perturb")

    return GeneratedSample(photo, transform, screen is not None, trace.jpeg_bytes)


def generate_sample(fg, bg, rng, cfg: GenConfig) -> tuple[np.ndarray, Homography]:
    """Synthesize one photo from loaded images; returns (photo, ground truth)."""
    s = _synthesize(fg, bg, rng, cfg)
    return s.photo, s.transform


@dataclass
class IndexedSample:
    index: int
    photo: np.ndarray
    transform: Homography
    screen_used: bool
    source_path: str
    jpeg_bytes: bytes | None


@lru_cache(maxsize=128)
def load_source(path: str, width: int, height: int) -> np.ndarray:
    """Pipeline source decoder: RGB, resampled to canvas size, cached."""
    img = resample(load_image(path), width, height)
    img.setflags(write=False)
    return img


def _synthesize_index(index, cfg, n_fg, n_bg, fetch_fg, fetch_bg, timings=None) -> IndexedSample:
    # draw order per index: fg pick, bg pick, then the synthesis draws
    rng = rng_for_sample(cfg.seed, index)
    fi = int(rng.integers(n_fg))
    bi = int(rng.integers(n_bg))
    fg, label = fetch_fg(fi)
    bg, _ = fetch_bg(bi)
    s = _synthesize(fg, bg, rng, cfg, timings)
    return IndexedSample(index, s.photo, s.transform, s.screen_used, label, s.jpeg_bytes)


def _synthesize_index_from_files(index, cfg, fg_paths, bg_paths, timings=None) -> IndexedSample:
    def fetch(paths):
        def get(i):
            p = str(paths[i])
            return load_source(p, cfg.width, cfg.height), p
        return get

    return _synthesize_index(
        index, cfg, len(fg_paths), len(bg_paths), fetch(fg_paths), fetch(bg_paths), timings
    )


def photo_bytes(sample: IndexedSample) -> bytes:
    """Final on-disk encoding: the perturbation step's JPEG bytes when that
    step fired, otherwise a fresh quality-95 encode."""
    if sample.jpeg_bytes is not None:
        return sample.jpeg_bytes
    return encode_jpeg(sample.photo, PHOTO_QUALITY)


def record_for(sample: IndexedSample) -> SampleRecord:
    return SampleRecord(
        photo_path=f"{sample.index:08d}.jpg",
        theta=tuple(float(v) for v in sample.transform.theta),
        source_path=sample.source_path,
        screen_used=sample.screen_used,
        seed_index=sample.index,
    )


# ---------------------------------------------------------------------------
# parallel dataset generation

_WORKER: dict = {}


def _init_worker(cfg, fg_paths, bg_paths, out_dir):
    _WORKER["cfg"] = cfg
    _WORKER["fg"] = fg_paths
    _WORKER["bg"] = bg_paths
    _WORKER["out"] = Path(out_dir) if out_dir is not None else None
    _WORKER.pop("pools", None)


def _init_pool_worker(cfg, fg_paths, bg_paths, out_dir):
    cv2.setNumThreads(0)  # one process per core; avoid oversubscription
    _init_worker(cfg, fg_paths, bg_paths, out_dir)


def _pool_context():
    try:
        return multiprocessing.get_context("fork")
    except ValueError:
        return multiprocessing.get_context()


class _single_threaded_cv:
    """Pin cv2 to one thread for the inline span (same arithmetic either
    way; keeps the determinism contract independent of cv2 internals)."""

    def __enter__(self):
        self._prev = cv2.getNumThreads()
        cv2.setNumThreads(0)

    def __exit__(self, *exc):
        cv2.setNumThreads(self._prev)


def _produce_span(span):
    start, stop = span
    cfg, fg_paths, bg_paths = _WORKER["cfg"], _WORKER["fg"], _WORKER["bg"]
    out_dir = _WORKER["out"]
    records, skipped, timings = [], [], {}
    for index in range(start, stop):
        try:
            sample = _synthesize_index_from_files(index, cfg, fg_paths, bg_paths, timings)
        except OSError as exc:
            skipped.append((index, str(exc)))
            continue
        record = record_for(sample)
        (out_dir / record.photo_path).write_bytes(photo_bytes(sample))
        records.append(record)
    return records, skipped, timings


@dataclass
class GenerationSummary:
    requested: int
    written: int
    skipped: list[tuple[int, str]]
    elapsed: float
    samples_per_second: float
    out_dir: Path
    manifest_path: Path
    step_seconds: dict[str, float] = field(default_factory=dict)


def _merge_timings(total: dict, part: dict):
    for k, v in part.items():
        total[k] = total.get(k, 0.0) + v


def _spans(n: int, workers: int) -> list[tuple[int, int]]:
    chunk = max(1, math.ceil(n / (workers * 4)))
    return [(s, min(s + chunk, n)) for s in range(0, n, chunk)]


def generate_dataset(sources: SourceSet, n: int, out_dir, cfg: GenConfig, workers: int = 1) -> GenerationSummary:
    """Write ``n`` samples (photos + one manifest) under ``out_dir``.

    Unreadable source images skip that index with a log line; output is
    byte-identical for any worker count.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    cfg.validate()
    fg_paths = sources.foregrounds()
    bg_paths = sources.backgrounds()
    if not fg_paths or not bg_paths:
        raise ConfigError("source directories must contain at least one image each")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    records: list[SampleRecord] = []
    skipped: list[tuple[int, str]] = []
    timings: dict[str, float] = {}
    workers = max(1, int(workers))
    if workers == 1:
        with _single_threaded_cv():
            _init_worker(cfg, fg_paths, bg_paths, out_dir)
            recs, skips, times = _produce_span((0, n))
        records.extend(recs)
        skipped.extend(skips)
        _merge_timings(timings, times)
    else:
        ctx = _pool_context()
        with ctx.Pool(
            processes=workers,
            initializer=_init_pool_worker,
            initargs=(cfg, fg_paths, bg_paths, out_dir),
        ) as pool:
            for recs, skips, times in pool.imap_unordered(_produce_span, _spans(n, workers)):
                records.extend(recs)
                skipped.extend(skips)
                _merge_timings(timings, times)
    elapsed = time.perf_counter() - t0

    for index, reason in sorted(skipped):
        logger.warning("skipped sample %d: %s", index, reason)

    records.sort(key=lambda r: r.seed_index)
    manifest_path = out_dir / MANIFEST_NAME
    write_manifest(manifest_path, records)
    return GenerationSummary(
        requested=n,
        written=len(records),
        skipped=sorted(skipped),
        elapsed=elapsed,
        samples_per_second=len(records) / elapsed if elapsed > 0 else float("inf"),
        out_dir=out_dir,
        manifest_path=manifest_path,
        step_seconds=timings,
    )


def write_manifest(path, records):
    Path(path).write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")


def read_manifest(path) -> list[SampleRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(SampleRecord.from_json(line))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad manifest line ({exc})") from exc
    return records


# ---------------------------------------------------------------------------
# streaming

def stream_indexed(sources: SourceSet, cfg: GenConfig):
    """Infinite deterministic stream of IndexedSample (no disk writes)."""
    cfg.validate()
    fg_paths = sources.foregrounds()
    bg_paths = sources.backgrounds()
    if not fg_paths or not bg_paths:
        raise ConfigError("source directories must contain at least one image each")
    index = 0
    while True:
        try:
            yield _synthesize_index_from_files(index, cfg, fg_paths, bg_paths)
        except OSError as exc:
            logger.warning("skipped sample %d: %s", index, exc)
        index += 1


def stream_samples(sources: SourceSet, cfg: GenConfig):
    """Infinite deterministic stream of (photo, theta) pairs; item k equals
    sample k of generate_dataset under the same seed and config."""
    for sample in stream_indexed(sources, cfg):
        yield sample.photo, np.array(sample.transform.theta)


# ---------------------------------------------------------------------------
# in-memory benchmark

_BENCH_POOL_BASE = 1 << 63  # keyed far away from sample indices


def bench_pool(cfg: GenConfig, kind: str, count: int = 16) -> list[np.ndarray]:
    """Procedural stand-in sources: band-limited noise upsampled to canvas
    size (smooth for foregrounds, busier for backgrounds)."""
    coarse = 6 if kind == "fg" else 24
    offset = 0 if kind == "fg" else count
    pool = []
    for k in range(count):
        rng = rng_for_sample(cfg.seed, _BENCH_POOL_BASE + offset + k)
        tile = rng.integers(0, 256, size=(coarse, coarse, 3), dtype=np.uint8)
        pool.append(resample(tile, cfg.width, cfg.height))
    return pool


def _bench_span(span):
    start, stop = span
    cfg = _WORKER["cfg"]
    if "pools" not in _WORKER:
        _WORKER["pools"] = (bench_pool(cfg, "fg"), bench_pool(cfg, "bg"))
    fg_pool, bg_pool = _WORKER["pools"]
    timings: dict[str, float] = {}
    fetch_fg = lambda i: (fg_pool[i], f"bench:fg/{i}")  # noqa: E731
    fetch_bg = lambda i: (bg_pool[i], f"bench:bg/{i}")  # noqa: E731
    for index in range(start, stop):
        _synthesize_index(index, cfg, len(fg_pool), len(bg_pool), fetch_fg, fetch_bg, timings)
    return stop - start, timings


@dataclass
class BenchResult:
    n: int
    elapsed: float
    samples_per_second: float
    step_seconds: dict[str, float]


def bench_generate(cfg: GenConfig, n: int, workers: int = 1) -> BenchResult:
    """Generate ``n`` samples in memory from procedural sources and time it."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    cfg.validate()
    workers = max(1, int(workers))
    t0 = time.perf_counter()
    produced = 0
    timings: dict[str, float] = {}
    if workers == 1:
        with _single_threaded_cv():
            _init_worker(cfg, [], [], None)
            count, times = _bench_span((0, n))
        produced += count
        _merge_timings(timings, times)
    else:
        ctx = _pool_context()
        with ctx.Pool(
            processes=workers, initializer=_init_pool_worker, initargs=(cfg, [], [], None)
        ) as pool:
            for count, times in pool.imap_unordered(_bench_span, _spans(n, workers)):
                produced += count
                _merge_timings(timings, times)
    elapsed = time.perf_counter() - t0
    return BenchResult(
        n=produced,
        elapsed=elapsed,
        samples_per_second=produced / elapsed if elapsed > 0 else float("inf"),
        step_seconds=timings,
    )


# ---------------------------------------------------------------------------
# run config file

def load_config(path) -> tuple[GenConfig, SourceSet | None]:
    """Parse a JSON run config.  All generation fields default to the
    standard values; an optional "sources" block names the image dirs."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    sources = None
    src = data.pop("sources", None)
    if src is not None:
        if not isinstance(src, dict) or set(src) - {"foreground_dir", "background_dir"}:
            raise ConfigError(f"{path}: sources must map foreground_dir/background_dir")
        if "foreground_dir" not in src or "background_dir" not in src:
            raise ConfigError(f"{path}: sources needs both foreground_dir and background_dir")
        sources = SourceSet(Path(src["foreground_dir"]), Path(src["background_dir"]))
    return GenConfig.from_dict(data), sources
