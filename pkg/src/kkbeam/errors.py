"""Exception hierarchy shared across the package.

ConfigError maps to CLI exit code 2, DataError and its subclasses to 3.
Operating-system level I/O failures (OSError) map to 4.
"""


class KKBeamError(Exception):
    """Base class for all package errors."""


class ConfigError(KKBeamError):
    """Invalid parameter value or configuration."""


class DataError(KKBeamError):
    """Inconsistent, malformed, or out-of-contract data."""


class WindowOverflowError(DataError):
    """An echo would fall beyond the acquisition window."""


class GuardBandError(DataError):
    """Not enough trailing samples to absorb the compression shear."""


class GeometryError(DataError):
    """Mismatch between data geometry and lookup tables or grid."""


class RoiError(DataError):
    """Region of interest is unusable (too small, overlapping, off-grid)."""


class MetricError(DataError):
    """A quality metric cannot be evaluated on this image."""


class FileFormatError(DataError):
    """A container file violates the binary format."""
