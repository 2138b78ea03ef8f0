"""Raster operations: projective warp with coverage mask, mask-weighted
composition, screen synthesis, rectification, and bilinear resampling.

Warping is inverse-mapped: every output pixel center pulls from its
preimage under the transform (hole-free by construction), bilinear with
clamp-to-edge at the source borders.  All geometry runs in float64; the
coverage mask is antialiased by a 2x2 supersampled inside test.
"""
from __future__ import annotations

import cv2
import numpy as np

from .geometry import Homography, invert
from .imgio import (  # noqa: F401  (re-exported: raster IO belongs to this module)
    IMAGE_SUFFIXES,
    check_image,
    decode_jpeg,
    encode_jpeg,
    load_image,
    save_image,
)
from .sampling import ScreenParams, screen_matrix


def _check_size(out_w: int, out_h: int):
    if out_w < 1 or out_h < 1:
        raise ValueError("output size must be at least 1x1")


def pixel_to_norm_matrix(width: int, height: int) -> np.ndarray:
    """Pixel (i, j) center -> normalized (x, y); centers at -1 + (2i+1)/W."""
    return np.array([
        [2.0 / width, 0.0, 1.0 / width - 1.0],
        [0.0, 2.0 / height, 1.0 / height - 1.0],
        [0.0, 0.0, 1.0],
    ])


def norm_to_pixel_matrix(width: int, height: int) -> np.ndarray:
    return np.array([
        [width / 2.0, 0.0, (width - 1) / 2.0],
        [0.0, height / 2.0, (height - 1) / 2.0],
        [0.0, 0.0, 1.0],
    ])


_MASK_LEVELS = np.array([0, 64, 128, 191, 255], dtype=np.uint8)  # (count*255+2)//4
_MASK_LEVELS.setflags(write=False)


def _coverage_mask(pull_norm: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Antialiased footprint of the source frame on the output canvas.

    ``pull_norm`` maps output pixel coords to source normalized coords.
    Each pixel's 2x2 subcell centers are tested against the source frame;
    the mask is the hit count scaled to 0..255.  The inside test
    w > 0, |x| <= w, |y| <= w equals the four half-planes
    w-x, w+x, w-y, w+y >= 0 in (i, j), a convex region (an invertible map
    cannot send a pixel to the zero vector, the only point they disagree
    on), so each subsample row covers one integer interval of columns;
    counting is done with per-row interval difference sums.
    """
    t = pull_norm
    planes = np.array([t[2] - t[0], t[2] + t[0], t[2] - t[1], t[2] + t[1]])
    rows = np.arange(out_h, dtype=np.float64)
    diff = np.zeros((out_h, out_w + 1), dtype=np.int8)
    row_idx = np.arange(out_h)
    for dj in (-0.25, 0.25):
        yj = rows + dj
        lo = np.full(out_h, -np.inf)
        hi = np.full(out_h, np.inf)
        dead = np.zeros(out_h, dtype=bool)
        for a, b, c in planes:
            rhs = b * yj + c  # constraint: a*i + rhs >= 0
            if abs(a) < 1e-14:
                dead |= rhs < 0.0
            elif a > 0.0:
                np.maximum(lo, rhs / -a, out=lo)
            else:
                np.minimum(hi, rhs / -a, out=hi)
        for di in (-0.25, 0.25):
            start = np.ceil(lo - di)
            end = np.floor(hi - di)
            np.clip(start, 0, out_w, out=start)
            np.clip(end, -1, out_w - 1, out=end)
            s = start.astype(np.int64)
            e = end.astype(np.int64) + 1
            valid = ~dead & (s < e)
            np.add.at(diff, (row_idx[valid], s[valid]), 1)
            np.add.at(diff, (row_idx[valid], e[valid]), -1)
    count = np.cumsum(diff, axis=1, dtype=np.int8)[:, :out_w]
    return _MASK_LEVELS[count]


def warp(src, transform: Homography, out_w: int, out_h: int) -> tuple[np.ndarray, np.ndarray]:
    """Warp ``src`` by ``transform`` onto an (out_w, out_h) canvas.

    Returns (image, mask): pixels whose preimage lies in the source frame
    carry the bilinear sample and mask 255; pixels outside are black with
    mask 0; boundary pixels get proportional mask values.
    """
    src = check_image(src)
    _check_size(out_w, out_h)
    src_h, src_w = src.shape[:2]
    pull_norm = invert(transform).matrix @ pixel_to_norm_matrix(out_w, out_h)
    pull_pix = norm_to_pixel_matrix(src_w, src_h) @ pull_norm
    img = cv2.warpPerspective(
        src,
        pull_pix,
        (out_w, out_h),
        flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
        borderMode=cv2.BORDER_REPLICATE,
    )
    mask = _coverage_mask(pull_norm, out_w, out_h)
    img *= (mask != 0)[..., None]
    return img, mask


def composite(fg, mask, bg) -> np.ndarray:
    """Mask-weighted overlay: out = (mask/255)*fg + (1 - mask/255)*bg.

    ``bg`` is resampled to the foreground size first if needed.
    """
    fg = check_image(fg)
    bg = check_image(bg)
    mask = np.asarray(mask)
    if mask.dtype != np.uint8 or mask.shape != fg.shape[:2]:
        raise ValueError("mask must be uint8 with the foreground's height and width")
    if bg.shape[:2] != fg.shape[:2]:
        bg = resample(bg, fg.shape[1], fg.shape[0])
    # integer form of round((mask/255)*fg + (1 - mask/255)*bg): the rational
    # value k/255 is never exactly half-integer, so no rounding ties exist
    m = mask.astype(np.uint16)[..., None]
    out = np.multiply(fg, m, dtype=np.uint16)
    out += np.multiply(bg, 255 - m, dtype=np.uint16)
    out += 127
    out //= 255
    return out.astype(np.uint8)


def resample(src, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize; exact copy when the size already matches."""
    src = check_image(src)
    _check_size(out_w, out_h)
    if src.shape[1] == out_w and src.shape[0] == out_h:
        return src.copy()
    return cv2.resize(src, (out_w, out_h), interpolation=cv2.INTER_LINEAR)


def synthesize_screen(src, screen: ScreenParams) -> np.ndarray:
    """Shrink the image into its padding and fill the border with the
    screen color (composition over a constant-color canvas at src size)."""
    src = check_image(src)
    canvas = np.empty_like(src)
    canvas[:] = np.asarray(screen.color, dtype=np.uint8)
    shrunk, mask = warp(src, screen_matrix(screen), src.shape[1], src.shape[0])
    return composite(shrunk, mask, canvas)


def rectify(photo, transform: Homography, out_w: int, out_h: int) -> np.ndarray:
    """Undo a projective transform: warp the photo by the inverse matrix."""
    img, _ = warp(photo, invert(transform), out_w, out_h)
    return img


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio (dB) between two same-shape 8-bit images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("PSNR requires same-shape images")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(255.0 ** 2 / mse)
