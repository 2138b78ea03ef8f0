"""Natural-perturbation augmentations for composited photos.

Application order mirrors a physical capture chain: illumination (pixel
add/multiply, HSV shift, color/brightness/sharpness enhancement), optics
(average blur), sensor (Gaussian noise), codec (JPEG round trip).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import cv2
import numpy as np
from PIL import Image, ImageEnhance

from .errors import ConfigError
from .imgio import check_image, decode_jpeg, encode_jpeg


@dataclass
class RangeStep:
    """One augmentation: a fire coin plus a uniform parameter range."""

    enabled: bool = True
    probability: float = 0.5
    low: float = 0.0
    high: float = 0.0


@dataclass
class HsvStep:
    enabled: bool = True
    probability: float = 0.5
    hue_low: float = -10.0
    hue_high: float = 10.0
    saturation_low: float = -20.0
    saturation_high: float = 20.0


@dataclass
class BlurStep:
    enabled: bool = True
    probability: float = 0.5
    kernels: tuple[int, ...] = (1, 3, 5)


def _range_step(low, high) -> RangeStep:
    return RangeStep(low=low, high=high)


@dataclass
class PerturbConfig:
    enabled: bool = True
    add_value: RangeStep = field(default_factory=lambda: _range_step(-30.0, 30.0))
    multiply_value: RangeStep = field(default_factory=lambda: _range_step(0.7, 1.3))
    hsv_shift: HsvStep = field(default_factory=HsvStep)
    color_enhance: RangeStep = field(default_factory=lambda: _range_step(0.6, 1.4))
    brightness_enhance: RangeStep = field(default_factory=lambda: _range_step(0.6, 1.4))
    sharpness_enhance: RangeStep = field(default_factory=lambda: _range_step(0.6, 1.4))
    average_blur: BlurStep = field(default_factory=BlurStep)
    gaussian_noise: RangeStep = field(default_factory=lambda: _range_step(0.0, 15.0))
    jpeg_quality: RangeStep = field(default_factory=lambda: _range_step(40, 95))

    def steps(self):
        for f in dataclasses.fields(self):
            if f.name != "enabled":
                yield f.name, getattr(self, f.name)

    def validate(self):
        for name, step in self.steps():
            if not 0.0 <= step.probability <= 1.0:
                raise ConfigError(f"perturb.{name}: probability must be in [0, 1]")
            if isinstance(step, RangeStep) and step.low > step.high:
                raise ConfigError(f"perturb.{name}: low > high")
            if isinstance(step, HsvStep):
                if step.hue_low > step.hue_high or step.saturation_low > step.saturation_high:
                    raise ConfigError(f"perturb.{name}: range is inverted")
            if isinstance(step, BlurStep):
                if not step.kernels:
                    raise ConfigError("perturb.average_blur: empty kernel list")
                for k in step.kernels:
                    if int(k) < 1 or int(k) % 2 == 0:
                        raise ConfigError("perturb.average_blur: kernels must be odd and >= 1")
        jq = self.jpeg_quality
        if jq.low < 1 or jq.high > 100:
            raise ConfigError("perturb.jpeg_quality: quality must be in [1, 100]")
        return self

    def to_dict(self) -> dict:
        out = {"enabled": self.enabled}
        for name, step in self.steps():
            d = dataclasses.asdict(step)
            if "kernels" in d:
                d["kernels"] = list(d["kernels"])
            out[name] = d
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PerturbConfig":
        if not isinstance(data, dict):
            raise ConfigError("perturb config must be a mapping")
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown perturb keys: {sorted(unknown)}")
        cfg = cls()
        for name, value in data.items():
            if name == "enabled":
                cfg.enabled = bool(value)
                continue
            step = getattr(cfg, name)
            if not isinstance(value, dict):
                raise ConfigError(f"perturb.{name} must be a mapping")
            step_fields = {f.name for f in dataclasses.fields(step)}
            bad = set(value) - step_fields
            if bad:
                raise ConfigError(f"unknown keys in perturb.{name}: {sorted(bad)}")
            for k, v in value.items():
                setattr(step, k, tuple(v) if k == "kernels" else v)
        return cfg.validate()


@dataclass
class PerturbationTrace:
    """Which steps fired, and the JPEG bytes if the codec step did."""

    applied: list[str] = field(default_factory=list)
    jpeg_bytes: bytes | None = None


def add_pixel_value(img, value: float) -> np.ndarray:
    img = check_image(img)
    v = float(value)
    return cv2.add(img, (v, v, v, 0.0))


def multiply_pixel_value(img, factor: float) -> np.ndarray:
    img = check_image(img)
    f = float(factor)
    return cv2.multiply(img, (f, f, f, 1.0))


_HSV_UPPER = np.array([720.0, 1.0, 1.0], dtype=np.float32)  # H<720 wraps in cv2
_HSV_UPPER.setflags(write=False)


def shift_hue_saturation(img, hue_degrees: float, saturation_delta: float) -> np.ndarray:
    """Rotate hue (wraps at 360 deg) and shift saturation (8-bit units).

    Runs in float32 HSV so a zero shift round-trips within 1 LSB.
    """
    img = check_image(img)
    rgb = img * np.float32(1.0 / 255.0)
    hsv = cv2.cvtColor(rgb, cv2.COLOR_RGB2HSV)
    hsv = cv2.add(hsv, (float(hue_degrees) % 360.0, float(saturation_delta) / 255.0, 0.0, 0.0))
    np.clip(hsv, 0.0, _HSV_UPPER, out=hsv)
    out = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB)
    return cv2.multiply(out, (255.0, 255.0, 255.0, 255.0), dtype=cv2.CV_8U)


def _enhance(enhancer, img, factor: float) -> np.ndarray:
    out = enhancer(Image.fromarray(check_image(img))).enhance(float(factor))
    return np.asarray(out)


def enhance_color(img, factor: float) -> np.ndarray:
    """1.0 = identity, 0.0 = grayscale."""
    return _enhance(ImageEnhance.Color, img, factor)


def enhance_brightness(img, factor: float) -> np.ndarray:
    """1.0 = identity, 0.0 = black."""
    return _enhance(ImageEnhance.Brightness, img, factor)


def enhance_sharpness(img, factor: float) -> np.ndarray:
    """1.0 = identity, 0.0 = smoothed, 2.0 = sharpened."""
    return _enhance(ImageEnhance.Sharpness, img, factor)


def average_blur(img, kernel_size: int) -> np.ndarray:
    img = check_image(img)
    k = int(kernel_size)
    if k < 1 or k % 2 == 0:
        raise ValueError("blur kernel must be odd and >= 1")
    if k == 1:
        return img.copy()
    return cv2.blur(img, (k, k))


def add_gaussian_noise(img, sigma: float, rng: np.random.Generator) -> np.ndarray:
    img = check_image(img)
    noise = rng.standard_normal(img.shape, dtype=np.float32)
    np.multiply(noise, np.float32(sigma), out=noise)
    return cv2.add(img, noise, dtype=cv2.CV_8U)


def jpeg_roundtrip(img, quality: int) -> tuple[np.ndarray, bytes]:
    """In-memory JPEG encode/decode; returns the decoded image and the bytes."""
    data = encode_jpeg(img, quality)
    return decode_jpeg(data), data


def apply_perturbations_traced(img, rng: np.random.Generator, cfg: PerturbConfig):
    """Run the chain; each enabled step fires independently with its
    probability.  Returns (image, trace).  Draw order is fixed: one uniform
    fire coin per enabled step, then that step's parameters if it fired."""
    out = check_image(img)
    trace = PerturbationTrace()
    if not cfg.enabled:
        return out, trace

    def fires(step) -> bool:
        return step.enabled and rng.random() < step.probability

    if fires(cfg.add_value):
        out = add_pixel_value(out, rng.uniform(cfg.add_value.low, cfg.add_value.high))
        trace.applied.append("add_value")
    if fires(cfg.multiply_value):
        out = multiply_pixel_value(out, rng.uniform(cfg.multiply_value.low, cfg.multiply_value.high))
        trace.applied.append("multiply_value")
    if fires(cfg.hsv_shift):
        hue = rng.uniform(cfg.hsv_shift.hue_low, cfg.hsv_shift.hue_high)
        sat = rng.uniform(cfg.hsv_shift.saturation_low, cfg.hsv_shift.saturation_high)
        out = shift_hue_saturation(out, hue, sat)
        trace.applied.append("hsv_shift")
    if fires(cfg.color_enhance):
        out = enhance_color(out, rng.uniform(cfg.color_enhance.low, cfg.color_enhance.high))
        trace.applied.append("color_enhance")
    if fires(cfg.brightness_enhance):
        out = enhance_brightness(out, rng.uniform(cfg.brightness_enhance.low, cfg.brightness_enhance.high))
        trace.applied.append("brightness_enhance")
    if fires(cfg.sharpness_enhance):
        out = enhance_sharpness(out, rng.uniform(cfg.sharpness_enhance.low, cfg.sharpness_enhance.high))
        trace.applied.append("sharpness_enhance")
    if fires(cfg.average_blur):
        k = cfg.average_blur.kernels[int(rng.integers(len(cfg.average_blur.kernels)))]
        out = average_blur(out, k)
        trace.applied.append("average_blur")
    if fires(cfg.gaussian_noise):
        sigma = rng.uniform(cfg.gaussian_noise.low, cfg.gaussian_noise.high)
        out = add_gaussian_noise(out, sigma, rng)
        trace.applied.append("gaussian_noise")
    if fires(cfg.jpeg_quality):
        q = int(rng.integers(int(cfg.jpeg_quality.low), int(cfg.jpeg_quality.high) + 1))
        out, trace.jpeg_bytes = jpeg_roundtrip(out, q)
        trace.applied.append("jpeg_quality")
    return out, trace


def apply_perturbations(img, rng: np.random.Generator, cfg: PerturbConfig) -> np.ndarray:
    return apply_perturbations_traced(img, rng, cfg)[0]
