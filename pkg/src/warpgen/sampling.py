"""Seeded random generation of all synthesis parameters.

Every draw flows through a counter-based (Philox) generator keyed by
(seed, sample_index), so any partition of sample indices across workers
reproduces the exact same streams.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SamplingError
from .geometry import (
    CANONICAL_CORNERS_H,
    Homography,
    QuadStatus,
    W_EPS,
    validate_quad,
)
from .perturb import PerturbConfig

_U64_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class TransformParams:
    """One draw of the five factor-action parameters."""

    cx: float
    cy: float
    sx: float
    sy: float
    alpha: float
    px: float
    py: float
    tx: float
    ty: float


@dataclass(frozen=True)
class ScreenParams:
    """Padding fractions (normalized units) and the border fill color."""

    top: float
    bottom: float
    left: float
    right: float
    color: tuple[int, int, int]


@dataclass
class TransformConfig:
    scale_min: float = 0.2
    scale_max: float = 0.8
    scale_diff_max: float = 0.2
    shear_min: float = -0.1
    shear_max: float = 0.1
    rotation_min: float = -math.pi
    rotation_max: float = math.pi
    perspective_sigma: float = 0.1
    translation_sigma: float = 0.25

    def validate(self):
        for lo, hi, name in (
            (self.scale_min, self.scale_max, "scale"),
            (self.shear_min, self.shear_max, "shear"),
            (self.rotation_min, self.rotation_max, "rotation"),
        ):
            if lo > hi:
                raise ConfigError(f"transform.{name}: min > max")
        if self.scale_diff_max < 0:
            raise ConfigError("transform.scale_diff_max must be >= 0")
        if self.perspective_sigma < 0 or self.translation_sigma < 0:
            raise ConfigError("transform sigmas must be >= 0")
        return self


@dataclass
class ScreenConfig:
    probability: float = 0.3
    pad_min: float = 0.0
    pad_max: float = 0.6
    color_min: int = 0
    color_max: int = 19

    def validate(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError("screen.probability must be in [0, 1]")
        if not 0.0 <= self.pad_min <= self.pad_max:
            raise ConfigError("screen padding range must satisfy 0 <= min <= max")
        if not 0 <= self.color_min <= self.color_max <= 255:
            raise ConfigError("screen color range must satisfy 0 <= min <= max <= 255")
        return self


def _from_dict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


@dataclass
class GenConfig:
    """Everything the generator draws from, plus the master seed."""

    seed: int = 0
    width: int = 224
    height: int = 224
    max_resample_attempts: int = 100
    transform: TransformConfig = field(default_factory=TransformConfig)
    screen: ScreenConfig = field(default_factory=ScreenConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)

    def validate(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError("canvas size must be at least 1x1")
        if self.max_resample_attempts < 1:
            raise ConfigError("max_resample_attempts must be >= 1")
        self.transform.validate()
        self.screen.validate()
        self.perturb.validate()
        return self

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
            "max_resample_attempts": self.max_resample_attempts,
            "transform": dataclasses.asdict(self.transform),
            "screen": dataclasses.asdict(self.screen),
            "perturb": self.perturb.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "transform" in kwargs:
            kwargs["transform"] = _from_dict(TransformConfig, kwargs["transform"], "transform")
        if "screen" in kwargs:
            kwargs["screen"] = _from_dict(ScreenConfig, kwargs["screen"], "screen")
        if "perturb" in kwargs:
            kwargs["perturb"] = PerturbConfig.from_dict(kwargs["perturb"])
        return cls(**kwargs).validate()


def rng_for_sample(seed: int, index: int) -> np.random.Generator:
    """Independent, schedule-free Philox stream for one sample index."""
    if index < 0:
        raise ValueError("sample index must be >= 0")
    key = np.array([int(seed) & _U64_MASK, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_transform_params(rng: np.random.Generator, cfg: TransformConfig) -> TransformParams:
    """One candidate draw.  The (cx, cy) pair is redrawn, not truncated,
    until |cx - cy| <= scale_diff_max, keeping the marginals uniform."""
    while True:
        cx = rng.uniform(cfg.scale_min, cfg.scale_max)
        cy = rng.uniform(cfg.scale_min, cfg.scale_max)
        if abs(cx - cy) <= cfg.scale_diff_max:
            break
    return TransformParams(
        cx=cx,
        cy=cy,
        sx=rng.uniform(cfg.shear_min, cfg.shear_max),
        sy=rng.uniform(cfg.shear_min, cfg.shear_max),
        alpha=rng.uniform(cfg.rotation_min, cfg.rotation_max),
        px=rng.normal(0.0, cfg.perspective_sigma),
        py=rng.normal(0.0, cfg.perspective_sigma),
        tx=rng.normal(0.0, cfg.translation_sigma),
        ty=rng.normal(0.0, cfg.translation_sigma),
    )


def transform_matrix(params: TransformParams) -> Homography:
    """Compose translation . perspective . rotation . shear . scale."""
    c, s = math.cos(params.alpha), math.sin(params.alpha)
    mc = np.array([[params.cx, 0.0, 0.0], [0.0, params.cy, 0.0], [0.0, 0.0, 1.0]])
    ms = np.array([[1.0, params.sx, 0.0], [params.sy, 1.0, 0.0], [0.0, 0.0, 1.0]])
    mr = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    mp = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [params.px, params.py, 1.0]])
    mt = np.array([[1.0, 0.0, params.tx], [0.0, 1.0, params.ty], [0.0, 0.0, 1.0]])
    m = mt @ mp @ mr @ ms @ mc
    # bottom-right entry of this product is exactly 1; no renormalization
    return Homography(m.reshape(-1)[:8])


def transform_is_valid(h: Homography) -> bool:
    """Emitted transforms must map the frame to a strictly convex quad with
    all four corners strictly in front of the camera plane (w > 0)."""
    hom = h.matrix @ CANONICAL_CORNERS_H
    w = hom[2]
    if not np.all(w > W_EPS):
        return False
    quad = (hom[:2] / w).T
    return validate_quad(quad) is QuadStatus.VALID


def sample_transform(rng: np.random.Generator, cfg: GenConfig) -> tuple[TransformParams, Homography]:
    """Draw (params, matrix) pairs until the emitted quad is valid."""
    for _ in range(cfg.max_resample_attempts):
        params = draw_transform_params(rng, cfg.transform)
        h = transform_matrix(params)
        if transform_is_valid(h):
            return params, h
    raise SamplingError(
        f"no valid transform within {cfg.max_resample_attempts} attempts; "
        "the configured parameter ranges look pathological"
    )


def sample_screen(rng: np.random.Generator, cfg: GenConfig) -> ScreenParams | None:
    """With probability screen.probability, draw screen padding and color."""
    sc = cfg.screen
    if rng.random() >= sc.probability:
        return None
    top = rng.uniform(sc.pad_min, sc.pad_max)
    bottom = rng.uniform(sc.pad_min, sc.pad_max)
    left = rng.uniform(sc.pad_min, sc.pad_max)
    right = rng.uniform(sc.pad_min, sc.pad_max)
    color = rng.integers(sc.color_min, sc.color_max + 1, size=3)
    return ScreenParams(
        top=top, bottom=bottom, left=left, right=right,
        color=(int(color[0]), int(color[1]), int(color[2])),
    )


def screen_matrix(p: ScreenParams) -> Homography:
    """Scale-down-and-translate matrix that places the image inside its
    padding: x scale 1-(l+r)/2 with offset (l-r)/2, y likewise with (t, b)."""
    return Homography(np.array([
        1.0 - (p.left + p.right) / 2.0, 0.0, (p.left - p.right) / 2.0,
        0.0, 1.0 - (p.top + p.bottom) / 2.0, (p.top - p.bottom) / 2.0,
        0.0, 0.0,
    ]))
