"""Custom exception hierarchy for nsdlab.

Every error carries the process exit code the CLI reports for it.
"""


class NsdLabError(Exception):
    """Base exception for all nsdlab errors."""

    exit_code: int = 1


class ConfigError(NsdLabError):
    """Raised when a configuration value is invalid or unsupported."""

    exit_code = 2


class DimensionError(NsdLabError):
    """Raised when tensor extents do not line up."""

    exit_code = 2


class RangeError(NsdLabError):
    """Raised when an index, rank or selection is out of range."""

    exit_code = 2


class OracleCapError(NsdLabError):
    """Raised when a dense verification oracle would exceed its size cap."""

    exit_code = 2


class ContractViolationError(NsdLabError):
    """Raised when a caller breaks an operation's contract."""


class DegenerateSegmentError(NsdLabError):
    """Raised when an expert segment has zero length in parameter space."""


class SamplingError(NsdLabError):
    """Raised when no expert segment can be sampled."""


class DataError(NsdLabError):
    """Raised when data values are invalid (e.g. labels out of range)."""

    exit_code = 3


class DataFormatError(NsdLabError):
    """Raised when a binary file does not match its declared format."""

    exit_code = 3


class FileOperationError(NsdLabError):
    """Raised when file read/write operations fail."""

    exit_code = 3


class FingerprintMismatchError(NsdLabError):
    """Raised when experts were trained on a different dataset."""

    exit_code = 4


class FormatNotSupportedError(NsdLabError):
    """Raised when no adapter is registered for a file format."""

    exit_code = 2
