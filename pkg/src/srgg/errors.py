"""Exception hierarchy shared by every module."""


class SrggError(Exception):
    """Base class for all package errors."""


class DomainError(SrggError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionError(SrggError, ValueError):
    pass


class SizeError(SrggError, ValueError):
    """A brute-force operation was asked for a problem that is too large."""


class NumericError(SrggError, ArithmeticError):
    """Quadrature failed to reach the requested accuracy."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class AssumptionError(NumericError):
    """An integrability condition on the connection profile does not hold."""


class ImpossibleRealizationError(SrggError, ValueError):
    """A graph realization has probability zero under the model."""


class ConfigError(SrggError, ValueError):
    pass
