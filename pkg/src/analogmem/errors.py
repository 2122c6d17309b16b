"""Exception hierarchy.

Each family carries the process exit code the CLI maps it to.
"""


class AnalogMemError(Exception):
    exit_code = 1


class ConfigError(AnalogMemError, ValueError):
    """Bad parameters or configuration."""

    exit_code = 2


class DataError(AnalogMemError, ValueError):
    """Measurement or artifact content is unusable."""

    exit_code = 3


class NumericalError(AnalogMemError, ArithmeticError):
    exit_code = 4


class InvalidParams(ConfigError):
    pass


class InvalidGrid(ConfigError):
    pass


class UnsortedThresholds(ConfigError):
    pass


class ThresholdOutOfRange(ConfigError):
    pass


class EmptyIndexSet(ConfigError):
    pass


class IndexOutOfRange(ConfigError):
    pass


class InvalidCounts(ConfigError):
    pass


class SearchSpaceTooLarge(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class EmptyVoltageBin(DataError):
    pass


class NonPositiveResistance(DataError):
    pass


class CsvSchemaError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ArtifactMismatch(ConfigError):
    """A downstream command was handed an artifact built from another config."""


class DegenerateChannel(NumericalError):
    pass


class AllZeroCapacity(NumericalError):
    pass
