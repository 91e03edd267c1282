"""Exception hierarchy shared by all simrel modules."""


class SimrelError(Exception):
    """Base class for every error raised by simrel."""


class UsageError(SimrelError, ValueError):
    """Bad arguments: out-of-range labels, horizon 0, arity mismatch."""


class ComposabilityError(SimrelError):
    """Two systems cannot be composed (serially or in feedback)."""

    def __init__(self, message, clause=None, label=None):
        super().__init__(message)
        self.clause = clause
        self.label = label


class RelationError(SimrelError):
    """A relation required by an operation does not hold."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParameterError(SimrelError):
    """Grid or growth-bound parameters violate a required inequality."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class InvariantViolation(SimrelError, AssertionError):
    """Two checkers that must agree did not. Always a bug in simrel."""


class InfeasibleError(SimrelError):
    """A synthesized controller has an empty domain and cannot be used."""
