"""Exception hierarchy. CLI exit codes hang off these classes."""


class KamError(Exception):
    exit_code = 1


class SchemaError(KamError, ValueError):
    """Malformed matrix, measure or map JSON."""

    exit_code = 2


class ConeError(KamError, ValueError):
    """Input outside the required cone (PD or PSD)."""

    exit_code = 3


class ConditioningError(KamError, ValueError):
    exit_code = 4


class DomainError(KamError, ValueError):
    """A scalar function was applied outside its domain."""


class HypothesisError(KamError, ValueError):
    """An operation was called on a mean that violates its preconditions."""


class AffineMeanError(KamError):
    """The mean is affine: its measure has no mass on (0, inf), so h is empty."""


class DiagnosticError(KamError, RuntimeError):
    """Two independent numerical routes disagree, or a limit misbehaves."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class EigenConvergenceError(KamError, RuntimeError):
    pass
