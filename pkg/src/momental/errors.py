"""Exception types shared across the library.

Each maps to one failure family named in the module contracts; the CLI
translates ConfigError to exit code 1 and MomentalIOError to exit code 2.
"""


class MomentalError(Exception):
    """Base class for all library errors."""


class ConfigError(MomentalError):
    """Invalid configuration: bad hyperparameters, malformed config files,
    unusable problem definitions."""


class DimensionError(MomentalError):
    """Vector length mismatch between operands."""


class NumericError(MomentalError):
    """Non-finite value where a finite one is required."""


class StateError(MomentalError):
    """Optimizer state misuse, e.g. the step counter reaching the point
    where a 64-bit implementation would wrap."""


class SequencingError(MomentalError):
    """Telemetry records appended out of step order."""


class AggregationError(MomentalError):
    """Seed aggregation over records whose configs disagree."""


class MomentalIOError(MomentalError):
    """Failure reading or writing an artifact file."""
