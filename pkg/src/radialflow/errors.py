"""Exception hierarchy shared by all modules."""


class RadialFlowError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RadialFlowError, ValueError):
    """An argument lies outside the domain of an operation."""


class TailFitError(RadialFlowError):
    """Asymptotic tail fits disagree or cannot be formed."""


class PreconditionError(RadialFlowError):
    """Geometric hypotheses of an operation are not met by the data."""


class EnclosureWindowError(RadialFlowError):
    """The minimizing enclosure hit the outer edge of its search window."""


class InvariantViolation(RadialFlowError):
    """A state invariant was breached beyond tolerance."""


class NumericalError(RadialFlowError):
    """A solver failed to converge or cross-checks disagree."""


class ConfigError(RadialFlowError):
    """Malformed or inconsistent run configuration."""
