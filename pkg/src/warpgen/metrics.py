"""Rectification scoring: exact convex-quad IoU and bootstrap-CI aggregation.

IoU is computed in the normalized plane by convex polygon clipping
(successive half-plane clips of one quad against the other's edges) and the
shoelace formula; it is resolution-independent and exact up to float64.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import EvalError
from .geometry import Homography, QuadStatus, as_quad, quad_from_matrix, validate_quad


def polygon_area(vertices) -> float:
    """Absolute shoelace area of a simple polygon given as (N, 2) vertices."""
    v = np.asarray(vertices, dtype=np.float64)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _clip_halfplane(poly, a, b, c):
    """Keep the part of ``poly`` where a*x + b*y + c >= 0 (one
    Sutherland-Hodgman step)."""
    out = []
    n = len(poly)
    for i in range(n):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % n]
        dp = a * px + b * py + c
        dq = a * qx + b * qy + c
        if dp >= 0.0:
            out.append((px, py))
        if (dp < 0.0) != (dq < 0.0):
            t = dp / (dp - dq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def intersect_convex_quads(a, b) -> np.ndarray:
    """Vertices of a ∩ b (may be empty); both quads must be convex."""
    qa = as_quad(a)
    qb = as_quad(b)
    # orient b's half-planes by its winding
    nxt = np.roll(qb, -1, axis=0)
    winding = float(np.sum(qb[:, 0] * nxt[:, 1] - nxt[:, 0] * qb[:, 1]))
    sign = 1.0 if winding > 0 else -1.0
    poly = [(float(x), float(y)) for x, y in qa]
    for i in range(4):
        px, py = qb[i]
        qx, qy = qb[(i + 1) % 4]
        # inside test: sign * cross(q - p, r - p) >= 0
        ca = sign * -(qy - py)
        cb = sign * (qx - px)
        cc = sign * ((qy - py) * px - (qx - px) * py)
        poly = _clip_halfplane(poly, ca, cb, cc)
        if not poly:
            break
    return np.array(poly, dtype=np.float64).reshape(-1, 2)


def quad_iou(a, b) -> float:
    """Intersection-over-union of two valid convex quads, in [0, 1]."""
    qa = as_quad(a)
    qb = as_quad(b)
    if validate_quad(qa) is not QuadStatus.VALID or validate_quad(qb) is not QuadStatus.VALID:
        raise EvalError("quad_iou requires strictly convex quads")
    inter = polygon_area(intersect_convex_quads(qa, qb))
    union = polygon_area(qa) + polygon_area(qb) - inter
    return min(max(inter / union, 0.0), 1.0)


@dataclass(frozen=True)
class Annotation:
    """Manually marked ground-truth region: photo id + 4 vertices in the
    canonical corner order, normalized coordinates."""

    photo_id: str
    quad: np.ndarray

    def __post_init__(self):
        q = as_quad(self.quad)
        if validate_quad(q) is not QuadStatus.VALID:
            raise EvalError(f"annotation {self.photo_id!r}: quad is not a valid convex quad")
        object.__setattr__(self, "quad", q)


@dataclass(frozen=True)
class EvalReport:
    ious: tuple[float, ...]
    mean_iou: float
    ci_low: float
    ci_high: float
    n: int

    def summary(self) -> str:
        return f"{self.mean_iou:.3f} ({self.ci_low:.3f}, {self.ci_high:.3f})"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean_iou": self.mean_iou,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "ious": list(self.ious),
        }


def _bootstrap_ci(values: np.ndarray, resamples: int, confidence: float, seed: int):
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    n = len(values)
    means = np.empty(resamples)
    chunk = max(1, 2_000_000 // n)
    done = 0
    while done < resamples:
        take = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(take, n))
        means[done : done + take] = values[idx].mean(axis=1)
        done += take
    tail = 100.0 * (1.0 - confidence) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(lo), float(hi)


def evaluate(
    predictions: Mapping[str, Homography] | Iterable[tuple[str, Homography]],
    annotations: Iterable[Annotation],
    *,
    bootstrap_resamples: int = 10_000,
    confidence: float = 0.95,
    bootstrap_seed: int = 0,
) -> EvalReport:
    """Per-sample IoU between each predicted region (quad of the predicted
    matrix) and its annotation, matched by photo_id; mean plus a seeded
    percentile-bootstrap confidence interval."""
    preds = dict(predictions)
    anns = list(annotations)
    if not anns:
        raise EvalError("no samples to evaluate")
    ann_ids = {a.photo_id for a in anns}
    missing = sorted(ann_ids - set(preds))
    extra = sorted(set(preds) - ann_ids)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"annotations without predictions: {missing}")
        if extra:
            parts.append(f"predictions without annotations: {extra}")
        raise EvalError("photo id mismatch; " + "; ".join(parts))

    ious = np.array(
        [quad_iou(quad_from_matrix(preds[a.photo_id]), a.quad) for a in anns]
    )
    mean = float(ious.mean())
    lo, hi = _bootstrap_ci(ious, bootstrap_resamples, confidence, bootstrap_seed)
    # percentile endpoints are clamped to bracket the observed mean
    lo, hi = min(lo, mean), max(hi, mean)
    return EvalReport(
        ious=tuple(float(v) for v in ious),
        mean_iou=mean,
        ci_low=lo,
        ci_high=hi,
        n=len(ious),
    )


def _parse_rows(path, n_values: int, what: str):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 1 + n_values:
                raise EvalError(
                    f"{path}:{lineno}: expected photo_id plus {n_values} values for {what}"
                )
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError as exc:
                raise EvalError(f"{path}:{lineno}: non-numeric value") from exc
            rows.append((parts[0], values, lineno))
    return rows


def read_annotations(path) -> list[Annotation]:
    """Text records: photo_id then 8 coordinates (x0 y0 ... x3 y3)."""
    out = []
    for photo_id, values, lineno in _parse_rows(path, 8, "an annotation"):
        quad = np.array(values).reshape(4, 2)
        try:
            out.append(Annotation(photo_id, quad))
        except EvalError as exc:
            raise EvalError(f"{path}:{lineno}: {exc}") from exc
    return out


def read_predictions(path) -> dict[str, Homography]:
    """Text records: photo_id then the 8 transform parameters."""
    out: dict[str, Homography] = {}
    for photo_id, values, lineno in _parse_rows(path, 8, "a prediction"):
        if photo_id in out:
            raise EvalError(f"{path}:{lineno}: duplicate photo_id {photo_id!r}")
        out[photo_id] = Homography(np.array(values))
    return out


def write_report(path, report: EvalReport):
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
