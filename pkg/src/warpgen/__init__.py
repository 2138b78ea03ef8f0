"""warpgen: deterministic synthesis of projective-warped photo training
samples with ground-truth transform matrices, plus rectification and
quad-IoU scoring."""

__version__ = "0.1.0"

from .errors import ConfigError, EvalError, GeometryError, SamplingError, WarpgenError
from .geometry import (
    AREA_MIN,
    CANONICAL_CORNERS,
    DET_EPS,
    Homography,
    QuadStatus,
    W_EPS,
    apply_point,
    apply_points,
    as_quad,
    compose,
    invert,
    make_perspective,
    make_rotation,
    make_scale,
    make_shear,
    make_translation,
    matrix_from_quad,
    quad_from_matrix,
    validate_quad,
)
from .sampling import (
    GenConfig,
    ScreenConfig,
    ScreenParams,
    TransformConfig,
    TransformParams,
    rng_for_sample,
    sample_screen,
    sample_transform,
    screen_matrix,
    transform_matrix,
)
from .perturb import PerturbConfig, apply_perturbations
from .compositor import (
    composite,
    decode_jpeg,
    encode_jpeg,
    load_image,
    psnr,
    rectify,
    resample,
    save_image,
    synthesize_screen,
    warp,
)
from .pipeline import (
    SampleRecord,
    SourceSet,
    bench_generate,
    generate_dataset,
    generate_sample,
    load_config,
    read_manifest,
    stream_samples,
)
from .metrics import Annotation, EvalReport, evaluate, quad_iou

__all__ = [
    "__version__",
    "WarpgenError", "GeometryError", "SamplingError", "ConfigError", "EvalError",
    "Homography", "QuadStatus", "CANONICAL_CORNERS", "W_EPS", "DET_EPS", "AREA_MIN",
    "make_scale", "make_shear", "make_rotation", "make_perspective", "make_translation",
    "compose", "invert", "apply_point", "apply_points", "as_quad",
    "quad_from_matrix", "matrix_from_quad", "validate_quad",
    "GenConfig", "TransformConfig", "ScreenConfig", "TransformParams", "ScreenParams",
    "rng_for_sample", "sample_transform", "sample_screen", "screen_matrix", "transform_matrix",
    "PerturbConfig", "apply_perturbations",
    "warp", "composite", "resample", "synthesize_screen", "rectify", "psnr",
    "load_image", "save_image", "encode_jpeg", "decode_jpeg",
    "SampleRecord", "SourceSet", "generate_sample", "generate_dataset", "stream_samples",
    "bench_generate", "read_manifest", "load_config",
    "Annotation", "EvalReport", "quad_iou", "evaluate",
]
