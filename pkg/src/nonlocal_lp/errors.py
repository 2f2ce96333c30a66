"""Exception hierarchy shared by every module."""


class NonlocalError(Exception):
    """Base class for all library errors."""


class ConfigurationError(NonlocalError):
    """Invalid static configuration (grid size, empty measure, bad config file)."""


class ArgumentError(NonlocalError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class HypothesisViolation(NonlocalError):
    """A standing structural hypothesis on the measure or coefficients fails."""


class DegenerateInputError(NonlocalError):
    """A ratio was requested whose denominator vanishes numerically."""


class UnsupportedConfiguration(NonlocalError):
    """The requested combination is deliberately not implemented."""


class NumericalError(NonlocalError):
    """A numerical routine failed to reach its accuracy target."""


class StabilityError(NonlocalError):
    """A time stepper detected growth it cannot control."""


class NonContractionError(NonlocalError):
    """The continuity-method fixed point iteration failed to contract."""


class WrongRouteError(NonlocalError):
    """The chosen solver route does not apply to the given problem."""


class InconsistencyError(NonlocalError):
    """A reported estimate is violated trivially (zero data, nonzero solution)."""
