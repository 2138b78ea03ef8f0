"""In-process bridge to the warpgen engine for external training loops.

Exposes exactly three operations plus the engine's version string:

* ``bound_stream``   - infinite iterator of batched samples (images as a
  contiguous uint8 (batch, H, W, 3) buffer, ground-truth parameters as a
  contiguous float64 (batch, 8) buffer),
* ``bound_rectify``  - inverse projective warp of one image buffer,
* ``bound_quad_iou`` - exact convex-quad IoU of two 8-value vertex arrays.

Batches are handed to the caller as owned copies; two iterators never
share state, and errors surface as ordinary Python exceptions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

import warpgen

__version__ = warpgen.__version__

__all__ = ["BoundSampleBatch", "bound_stream", "bound_rectify", "bound_quad_iou", "__version__"]


@dataclass(frozen=True)
class BoundSampleBatch:
    """One training batch: photos and their ground-truth parameters."""

    images: np.ndarray  # (batch, height, width, 3) uint8, C-contiguous
    thetas: np.ndarray  # (batch, 8) float64, C-contiguous


def bound_stream(config_path, seed: int | None = None, batch: int = 32) -> Iterator[BoundSampleBatch]:
    """Yield batches indefinitely from the run config's source directories.

    ``seed`` overrides the config seed; equal (config, seed) produce equal
    streams, element for element.
    """
    if batch < 1:
        raise ValueError("batch must be >= 1")
    cfg, sources = warpgen.load_config(config_path)
    if sources is None:
        raise warpgen.ConfigError(f"{config_path}: run config must declare sources")
    if seed is not None:
        cfg.seed = int(seed)
    stream = warpgen.stream_samples(sources, cfg)

    def batches():
        while True:
            images = np.empty((batch, cfg.height, cfg.width, 3), dtype=np.uint8)
            thetas = np.empty((batch, 8), dtype=np.float64)
            for k in range(batch):
                photo, theta = next(stream)
                images[k] = photo
                thetas[k] = theta
            yield BoundSampleBatch(images=images, thetas=thetas)

    return batches()


def bound_rectify(image, theta, out_size) -> np.ndarray:
    """Inverse-warp ``image`` by the transform given as its 8 parameters.

    ``out_size`` is (width, height); the result is a fresh uint8 buffer.
    """
    transform = warpgen.Homography(np.asarray(theta, dtype=np.float64))
    out_w, out_h = int(out_size[0]), int(out_size[1])
    return warpgen.rectify(np.ascontiguousarray(image), transform, out_w, out_h)


def bound_quad_iou(a, b) -> float:
    """IoU of two convex quads, each given as 8 reals (x0 y0 ... x3 y3)."""
    qa = np.asarray(a, dtype=np.float64).reshape(4, 2)
    qb = np.asarray(b, dtype=np.float64).reshape(4, 2)
    return warpgen.quad_iou(qa, qb)
