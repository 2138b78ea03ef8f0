"""Shared test utilities: independent oracles and synthetic images.

Everything here stays deliberately independent of the library paths it
checks: dense 3x3 multiplication, adjugate inversion, brute-force
supersampled masks, and pixel-count IoU rasterization are all written from
first principles.
"""
from __future__ import annotations

import numpy as np

import warpgen as w


def matmul3_oracle(a, b):
    """Dense 3x3 multiply with explicit loops; no renormalization."""
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += a[i][k] * b[k][j]
            out[i, j] = s
    return out


def adjugate_inverse_oracle(m):
    """Inverse via the cofactor/adjugate formula, normalized to m33 = 1."""
    m = np.asarray(m, dtype=np.float64)
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            cof[i, j] = ((-1) ** (i + j)) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    det = m[0, 0] * cof[0, 0] + m[0, 1] * cof[0, 1] + m[0, 2] * cof[0, 2]
    inv = cof.T / det
    return inv / inv[2, 2]


def random_transform(g: np.random.Generator) -> w.Homography:
    """Well-conditioned random transform built from the factor ops."""
    h = w.make_translation(g.normal(0, 0.25), g.normal(0, 0.25))
    h = w.compose(h, w.make_perspective(g.normal(0, 0.1), g.normal(0, 0.1)))
    h = w.compose(h, w.make_rotation(g.uniform(-np.pi, np.pi)))
    h = w.compose(h, w.make_shear(g.uniform(-0.1, 0.1), g.uniform(-0.1, 0.1)))
    return w.compose(h, w.make_scale(g.uniform(0.3, 0.9), g.uniform(0.3, 0.9)))


def sampled_transform(seed: int, index: int, cfg: w.GenConfig | None = None) -> w.Homography:
    """A transform drawn from the generator's own distribution."""
    cfg = cfg or w.GenConfig()
    _, h = w.sample_transform(w.rng_for_sample(seed, index), cfg)
    return h


def smooth_image(g: np.random.Generator, width: int, height: int, coarse: int = 6) -> np.ndarray:
    """Band-limited random image: coarse noise bilinearly upsampled."""
    tile = g.integers(0, 256, size=(coarse, coarse, 3), dtype=np.uint8)
    return w.resample(tile, width, height)


def textured_image(g: np.random.Generator, width: int, height: int) -> np.ndarray:
    return smooth_image(g, width, height, coarse=24)


def central_region_visible(h: w.Homography, margin: float = 0.0) -> bool:
    """True when the image of the central half-frame stays on-canvas, so a
    rectify round trip loses information to interpolation only."""
    half = 0.5 * w.CANONICAL_CORNERS
    try:
        pts = w.apply_points(h, half)
    except w.GeometryError:
        return False
    return bool(np.all(np.abs(pts) <= 1.0 - margin))


def central_crop(img: np.ndarray) -> np.ndarray:
    h, w_ = img.shape[:2]
    return img[h // 4 : h - h // 4, w_ // 4 : w_ - w_ // 4]


def make_source_dirs(root, g: np.random.Generator, count: int = 6, size: int = 96):
    """Write smooth foregrounds and textured backgrounds as PNGs."""
    fg_dir = root / "fg"
    bg_dir = root / "bg"
    fg_dir.mkdir(parents=True, exist_ok=True)
    bg_dir.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        w.save_image(fg_dir / f"fg_{i:02d}.png", smooth_image(g, size, size))
        w.save_image(bg_dir / f"bg_{i:02d}.png", textured_image(g, size, size))
    return w.SourceSet(fg_dir, bg_dir)


# ---------------------------------------------------------------------------
# rasterized pixel-count IoU oracle

def _halfplanes(quad):
    """(4, 3) coefficients with a*x + b*y + c >= 0 inside the convex quad."""
    q = np.asarray(quad, dtype=np.float64)
    nxt = np.roll(q, -1, axis=0)
    winding = float(np.sum(q[:, 0] * nxt[:, 1] - nxt[:, 0] * q[:, 1]))
    sign = 1.0 if winding > 0 else -1.0
    planes = np.empty((4, 3))
    for i in range(4):
        px, py = q[i]
        qx, qy = nxt[i]
        planes[i] = (
            sign * -(qy - py),
            sign * (qx - px),
            sign * ((qy - py) * px - (qx - px) * py),
        )
    return planes


def _count_inside(planes, x0, dx, y0, dy, resolution):
    """Count grid cell centers satisfying all half-planes, row by row.

    Exactly equals a brute-force center-inside rasterization of the same
    grid; the intersection of half-planes is convex, so each row covers one
    contiguous index interval.
    """
    rows = y0 + (np.arange(resolution) + 0.5) * dy
    lo = np.full(resolution, -np.inf)
    hi = np.full(resolution, np.inf)
    dead = np.zeros(resolution, dtype=bool)
    for a, b, c in planes:
        rhs = b * rows + c
        if abs(a) < 1e-300:
            dead |= rhs < 0.0
        else:
            bound = rhs / -a
            # x >= bound when a > 0, x <= bound when a < 0
            if a > 0:
                np.maximum(lo, bound, out=lo)
            else:
                np.minimum(hi, bound, out=hi)
    # centers x_i = x0 + (i + 0.5) dx inside [lo, hi]
    first = np.ceil((lo - x0) / dx - 0.5)
    last = np.floor((hi - x0) / dx - 0.5)
    np.clip(first, 0, resolution, out=first)
    np.clip(last, -1, resolution - 1, out=last)
    counts = np.maximum(last - first + 1, 0)
    counts[dead] = 0
    return int(counts.sum())


def raster_iou(quad_a, quad_b, resolution: int = 4096) -> float:
    """Pixel-count IoU oracle on a resolution^2 grid over the joint bbox."""
    qa = np.asarray(quad_a, dtype=np.float64)
    qb = np.asarray(quad_b, dtype=np.float64)
    pts = np.vstack([qa, qb])
    x0, y0 = pts.min(axis=0) - 1e-6
    x1, y1 = pts.max(axis=0) + 1e-6
    dx = (x1 - x0) / resolution
    dy = (y1 - y0) / resolution
    pa = _halfplanes(qa)
    pb = _halfplanes(qb)
    ca = _count_inside(pa, x0, dx, y0, dy, resolution)
    cb = _count_inside(pb, x0, dx, y0, dy, resolution)
    cab = _count_inside(np.vstack([pa, pb]), x0, dx, y0, dy, resolution)
    union = ca + cb - cab
    return cab / union if union else 0.0


def brute_count_inside(planes, x0, dx, y0, dy, resolution) -> int:
    """Literal rasterized-mask count (row-chunked); slow, for cross-checks."""
    total = 0
    xs = x0 + (np.arange(resolution) + 0.5) * dx
    for j0 in range(0, resolution, 256):
        j1 = min(j0 + 256, resolution)
        ys = y0 + (np.arange(j0, j1) + 0.5) * dy
        inside = np.ones((j1 - j0, resolution), dtype=bool)
        for a, b, c in planes:
            inside &= (a * xs)[None, :] + (b * ys)[:, None] + c >= 0.0
        total += int(inside.sum())
    return total
