"""8-bit RGB raster IO: PNG/JPEG files and in-memory JPEG codec."""
from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def check_image(img) -> np.ndarray:
    a = np.asarray(img)
    if a.ndim != 3 or a.shape[2] != 3 or a.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 RGB image")
    return a


def load_image(path) -> np.ndarray:
    """Read a PNG/JPEG file as (H, W, 3) uint8 RGB.

    Grayscale inputs are replicated to 3 channels.  Raises OSError for
    missing or undecodable files.
    """
    raw = Path(path).read_bytes()
    img = cv2.imdecode(np.frombuffer(raw, dtype=np.uint8), cv2.IMREAD_COLOR)
    if img is None:
        raise OSError(f"could not decode image: {path}")
    return np.ascontiguousarray(img[:, :, ::-1])


def save_image(path, img, jpeg_quality: int = 95):
    """Write an RGB image as PNG or JPEG, chosen by file suffix."""
    img = check_image(img)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        ok, buf = cv2.imencode(".png", img[:, :, ::-1])
    elif suffix in (".jpg", ".jpeg"):
        ok, buf = cv2.imencode(
            ".jpg", img[:, :, ::-1], [cv2.IMWRITE_JPEG_QUALITY, int(jpeg_quality)]
        )
    else:
        raise ValueError(f"unsupported image suffix: {path.suffix!r}")
    if not ok:
        raise OSError(f"could not encode image for {path}")
    path.write_bytes(buf.tobytes())


def encode_jpeg(img, quality: int) -> bytes:
    img = check_image(img)
    ok, buf = cv2.imencode(".jpg", img[:, :, ::-1], [cv2.IMWRITE_JPEG_QUALITY, int(quality)])
    if not ok:
        raise OSError("JPEG encoding failed")
    return buf.tobytes()


def decode_jpeg(data: bytes) -> np.ndarray:
    img = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_COLOR)
    if img is None:
        raise OSError("JPEG decoding failed")
    return np.ascontiguousarray(img[:, :, ::-1])
