"""Exception types shared across the package."""


class TSRMError(Exception):
    """Base class for all errors raised by tsrm."""


class DomainError(TSRMError, ValueError):
    """Argument outside the mathematical domain of a function."""


class RangeError(TSRMError, ValueError):
    """Argument inside the domain but outside the certified evaluation range."""


class SpectrumError(TSRMError, RuntimeError):
    """A zero of u' could not be bracketed or refined."""


class ConfigurationError(TSRMError, ValueError):
    """Inconsistent or degenerate numerical parameters."""


class SamplingError(TSRMError, RuntimeError):
    """A Monte Carlo path could not be completed."""


class StatisticsError(TSRMError, ValueError):
    """Sample unsuitable for the requested statistic."""
