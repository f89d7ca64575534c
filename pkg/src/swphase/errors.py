"""Exception types shared across the package."""


class SwphaseError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SwphaseError):
    """A parameter or configuration value is out of its valid range."""


class StreamIntegrityError(SwphaseError):
    """A sample stream carried a non-finite or otherwise invalid value."""


class FileFormatError(SwphaseError):
    """A file failed to parse; message names the offending line or byte."""


class UndefinedStatisticError(SwphaseError):
    """A statistic has no defined value (zero resultant, empty denominator)."""


class RecordingTooShortError(SwphaseError):
    """Recording shorter than the minimum the operation requires."""


class TimerResolutionError(SwphaseError):
    """The benchmark clock is too coarse for per-sample measurement."""
