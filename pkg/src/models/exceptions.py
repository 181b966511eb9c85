"""
Readout Throughput - Exceptions
Error hierarchy shared by the numerical model, the sweeps and the CLI
"""


class ReadoutModelError(Exception):
    """Base class for all errors raised by the readout model"""


class DomainError(ReadoutModelError, ValueError):
    """Argument outside the domain of an operation"""


class ParameterError(ReadoutModelError, ValueError):
    """Invariant of a parameter record violated"""


class GridClippingError(ReadoutModelError):
    """Score grid cuts off a non-negligible part of a mixture"""


class ConfigurationError(ReadoutModelError):
    """Run configuration could not be parsed or validated"""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
