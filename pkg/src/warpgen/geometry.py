"""Projective transform algebra on the normalized [-1, 1]^2 plane.

Conventions: +x right, +y down (matching raster row order).  A raster of
width W and height H has pixel centers at (-1 + (2i+1)/W, -1 + (2j+1)/H).
Transforms are stored by their 8 free parameters; the bottom-right matrix
entry is always 1 and is never stored.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

# Tolerances separating genuine degeneracy from 64-bit float noise.
W_EPS = 1e-8      # |w| at or below this: point at infinity
DET_EPS = 1e-12   # |det| at or below this: singular matrix
AREA_MIN = 1e-4   # quad area (normalized units^2) at or below this: degenerate


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


#: Corners of the normalized image frame, in fixed vertex order:
#: top-left, top-right, bottom-right, bottom-left (+y points down).
CANONICAL_CORNERS = _readonly(
    np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
)

#: Same corners as homogeneous column vectors, shape (3, 4).
CANONICAL_CORNERS_H = _readonly(
    np.vstack([CANONICAL_CORNERS.T, np.ones(4)])
)


class QuadStatus(enum.Enum):
    VALID = "valid"
    NONCONVEX = "nonconvex"
    DEGENERATE = "degenerate"


@dataclass(frozen=True, eq=False)
class Homography:
    """Plane projective transform, stored row-major as
    [[t1, t2, t3], [t4, t5, t6], [t7, t8, 1]]."""

    theta: np.ndarray

    def __post_init__(self):
        t = np.array(self.theta, dtype=np.float64).reshape(-1)
        if t.shape != (8,):
            raise GeometryError(f"expected 8 transform parameters, got {t.size}")
        if not np.all(np.isfinite(t)):
            raise GeometryError("non-finite transform parameters")
        object.__setattr__(self, "theta", _readonly(t))

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_matrix(cls, matrix) -> "Homography":
        """Normalize an arbitrary 3x3 matrix so its bottom-right entry is 1."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise GeometryError(f"expected a 3x3 matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise GeometryError("non-finite matrix entries")
        w = m[2, 2]
        if abs(w) < W_EPS:
            raise GeometryError("near-degenerate matrix: bottom-right entry ~ 0")
        return cls((m / w).reshape(-1)[:8])

    @property
    def matrix(self) -> np.ndarray:
        m = np.empty((3, 3))
        m.reshape(-1)[:8] = self.theta
        m[2, 2] = 1.0
        return m

    def __repr__(self):
        vals = ", ".join(f"{v:.6g}" for v in self.theta)
        return f"Homography([{vals}])"


def _require_finite(name: str, *values: float):
    for v in values:
        if not math.isfinite(v):
            raise GeometryError(f"non-finite {name} parameter")


def make_scale(cx: float, cy: float) -> Homography:
    cx, cy = float(cx), float(cy)
    _require_finite("scale", cx, cy)
    if cx == 0.0 or cy == 0.0:
        raise GeometryError("zero scale factor is degenerate")
    return Homography(np.array([cx, 0.0, 0.0, 0.0, cy, 0.0, 0.0, 0.0]))


def make_shear(sx: float, sy: float) -> Homography:
    sx, sy = float(sx), float(sy)
    _require_finite("shear", sx, sy)
    # det = 1 - sx*sy; only the product hitting +1 is singular
    if abs(1.0 - sx * sy) < DET_EPS:
        raise GeometryError("singular shear: Sx*Sy = 1")
    return Homography(np.array([1.0, sx, 0.0, sy, 1.0, 0.0, 0.0, 0.0]))


def make_rotation(alpha: float) -> Homography:
    alpha = float(alpha)
    _require_finite("rotation", alpha)
    c, s = math.cos(alpha), math.sin(alpha)
    return Homography(np.array([c, s, 0.0, -s, c, 0.0, 0.0, 0.0]))


def make_perspective(px: float, py: float) -> Homography:
    px, py = float(px), float(py)
    _require_finite("perspective", px, py)
    return Homography(np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, px, py]))


def make_translation(tx: float, ty: float) -> Homography:
    tx, ty = float(tx), float(ty)
    _require_finite("translation", tx, ty)
    return Homography(np.array([1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0]))


def compose(a: Homography, b: Homography) -> Homography:
    """Matrix product a @ b (apply b first), renormalized to m33 = 1."""
    return Homography.from_matrix(a.matrix @ b.matrix)


def invert(h: Homography) -> Homography:
    m = h.matrix
    if abs(np.linalg.det(m)) <= DET_EPS:
        raise GeometryError("singular transform cannot be inverted")
    return Homography.from_matrix(np.linalg.inv(m))


def apply_point(h: Homography, point) -> tuple[float, float]:
    """Map a single (x, y) point, dehomogenizing the result."""
    x, y = float(point[0]), float(point[1])
    t = h.theta
    w = t[6] * x + t[7] * y + 1.0
    if abs(w) <= W_EPS:
        raise GeometryError("point maps to infinity")
    return ((t[0] * x + t[1] * y + t[2]) / w, (t[3] * x + t[4] * y + t[5]) / w)


def apply_points(h: Homography, points) -> np.ndarray:
    """Vectorized apply_point over an (N, 2) array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) point array, got shape {pts.shape}")
    m = h.matrix
    hom = pts @ m[:, :2].T + m[:, 2]
    w = hom[:, 2]
    if np.any(np.abs(w) <= W_EPS):
        raise GeometryError("point maps to infinity")
    return hom[:, :2] / w[:, None]


def as_quad(quad) -> np.ndarray:
    """Coerce to a read-only (4, 2) float64 vertex array."""
    q = np.array(quad, dtype=np.float64)
    if q.shape != (4, 2):
        raise ValueError(f"expected 4 (x, y) vertices, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite quad vertices")
    return _readonly(q)


def quad_from_matrix(h: Homography) -> np.ndarray:
    """Image of the canonical corners; vertex i corresponds to corner i."""
    try:
        return apply_points(h, CANONICAL_CORNERS)
    except GeometryError as exc:
        raise GeometryError("degenerate transform: a corner maps to infinity") from exc


def matrix_from_quad(quad) -> Homography:
    """Unique transform mapping the canonical corners onto ``quad`` positionwise.

    Solves the 8x8 direct-linear-transform system from the four point
    correspondences, with the bottom-right entry pinned to 1.
    """
    q = as_quad(quad)
    a = np.zeros((8, 8))
    b = np.empty(8)
    for i in range(4):
        u, v = CANONICAL_CORNERS[i]
        x, y = q[i]
        a[2 * i] = (u, v, 1.0, 0.0, 0.0, 0.0, -x * u, -x * v)
        a[2 * i + 1] = (0.0, 0.0, 0.0, u, v, 1.0, -y * u, -y * v)
        b[2 * i] = x
        b[2 * i + 1] = y
    try:
        theta = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("degenerate quad: correspondence system is singular") from exc
    return Homography(theta)


def validate_quad(quad) -> QuadStatus:
    """Classify a vertex array: VALID (strictly convex, consistent winding,
    area above AREA_MIN), NONCONVEX, or DEGENERATE.  Total function."""
    q = np.asarray(quad, dtype=np.float64)
    if q.shape != (4, 2):
        raise ValueError(f"expected 4 (x, y) vertices, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        return QuadStatus.DEGENERATE
    nxt = np.roll(q, -1, axis=0)
    area = 0.5 * abs(float(np.sum(q[:, 0] * nxt[:, 1] - nxt[:, 0] * q[:, 1])))
    if area <= AREA_MIN:
        return QuadStatus.DEGENERATE
    edges = nxt - q
    after = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * after[:, 1] - edges[:, 1] * after[:, 0]
    if np.all(cross > 0.0) or np.all(cross < 0.0):
        return QuadStatus.VALID
    return QuadStatus.NONCONVEX
