"""Exception types shared across the package."""


class WarpgenError(Exception):
    """Base class for all errors raised by warpgen."""


class GeometryError(WarpgenError):
    """Degenerate or singular geometric input: zero scale factor, singular
    matrix, point at infinity, unsolvable quad correspondence."""


class SamplingError(WarpgenError):
    """Random transform generation exhausted its resample budget (the
    configured parameter ranges cannot produce a valid quad)."""


class ConfigError(WarpgenError):
    """Invalid, inconsistent, or unparseable generation config."""


class EvalError(WarpgenError):
    """Evaluation inputs are unusable: invalid quads, unmatched photo ids,
    or empty sample sets."""
