"""Exception hierarchy. The CLI maps each family to an exit code."""


class LightFieldError(Exception):
    """Base class for every error raised by this package."""


class DataError(LightFieldError):
    """Invalid values: NaN in a payload, negative intensities, bad shapes."""


class FormatError(DataError):
    """File does not carry the expected magic bytes or header."""


class LengthError(DataError):
    """File payload is truncated or has trailing bytes."""


class ShapeError(DataError):
    """Operands disagree on a dimension."""


class GeometryError(LightFieldError):
    """A synthesized PSF slice would fall outside its kernel support."""


class DegenerateSliceError(DataError):
    """A PSF slice has zero total mass."""


class NumericError(LightFieldError):
    """A computation produced NaN or infinity."""


class ConfigError(LightFieldError):
    """Unknown key, malformed value or missing setting in a config file."""
