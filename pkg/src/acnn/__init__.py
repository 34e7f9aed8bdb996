"""Toolchain for adiabatic capacitive neural network chips.

Generate arrow datasets, train and quantize the binary net, compile
weights into capacitor trees, simulate the chip with fabrication
mismatch and comparator noise, solve the power-clock transients, and
account for the energy per operation.
"""

from .errors import (
    AcnnError,
    ConfigError,
    DataError,
    MappingError,
    NumericalError,
    ParseError,
    ShapeError,
)

__version__ = "0.1.0"

__all__ = [
    "AcnnError",
    "ConfigError",
    "DataError",
    "MappingError",
    "NumericalError",
    "ParseError",
    "ShapeError",
    "__version__",
]
