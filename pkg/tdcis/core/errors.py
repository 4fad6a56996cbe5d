"""
Exception hierarchy for TDCIS.

Every error raised on purpose by the library derives from ``TDCISError`` so
callers (and the CLI exit-code mapping) can catch by family.
"""

from typing import Any, Optional


class TDCISError(Exception):
    """Base class for all TDCIS errors."""

    pass


class DimensionError(TDCISError):
    """Raised when points, fields or systems disagree on degrees of freedom or arity."""

    pass


class NumericError(TDCISError):
    """Raised when a value or gradient is not finite."""

    pass


class IntegrationError(NumericError):
    """Raised when an ODE integration cannot be completed."""

    def __init__(self, message: str, last_point: Optional[Any] = None):
        super().__init__(message)
        self.last_point = last_point


class DivergenceError(IntegrationError):
    """Raised when the step budget is exhausted before reaching the target."""

    pass


class BlowUpError(IntegrationError):
    """Raised when the state becomes non-finite or the step size collapses."""

    pass


class IncompletenessError(IntegrationError):
    """Raised when a flow cannot be continued over the requested parameter range."""

    pass


class ChartError(TDCISError):
    """Base class for action-angle chart construction failures."""

    pass


class NonCompactError(ChartError):
    """Raised when a level set is open or unbounded."""

    pass


class PeriodNotFoundError(ChartError):
    """Raised when a traced level curve does not close within the parameter cap."""

    pass


class SeparatrixError(PeriodNotFoundError):
    """Raised when a level lies on (or too close to) a critical value."""

    pass


class ChartDomainError(ChartError):
    """Raised when a chart is evaluated outside the domain it was built for."""

    pass


class ConfigError(TDCISError):
    """Raised when a run configuration is malformed."""

    pass


class ExpressionError(TDCISError):
    """Raised when an arithmetic expression cannot be parsed or evaluated."""

    pass


class UnknownSystemError(TDCISError):
    """Raised when a system name is not registered."""

    pass


class SamplingError(TDCISError, ValueError):
    """Raised when a sampling region cannot produce the requested points."""

    pass
