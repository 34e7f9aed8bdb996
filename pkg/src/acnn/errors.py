"""Exception hierarchy shared across the toolchain.

The CLI maps these onto process exit codes: configuration problems exit
with 1, bad input data with 2, numerical failures with 3.
"""


class AcnnError(Exception):
    """Base class for all toolchain errors."""


class ConfigError(AcnnError):
    """A parameter or configuration value is invalid."""


class DataError(AcnnError):
    """Input data (dataset, net, chip, table) is malformed or unusable."""


class ParseError(DataError):
    """A serialized artifact failed to parse.

    Carries enough location information to point at the offending spot.
    """

    def __init__(self, message, *, line=None, offset=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte offset {offset}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ShapeError(DataError):
    """An array has the wrong shape for the requested operation."""

    def __init__(self, what, expected, got):
        super().__init__(f"{what}: expected shape {expected}, got {got}")
        self.expected = expected
        self.got = got


class MappingError(DataError):
    """A weight vector cannot be realized as a capacitor network."""


class NumericalError(AcnnError):
    """A computation produced non-finite or otherwise unusable numbers."""
