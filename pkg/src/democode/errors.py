"""Exception hierarchy.

Every error raised by the library derives from :class:`DemocodeError`, so
callers (including the CLI) can separate library failures from bugs.
"""


class DemocodeError(Exception):
    """Base class for all library errors."""


class InvalidDimensions(DemocodeError, ValueError):
    pass


class DimensionMismatch(DemocodeError, ValueError):
    pass


class InvalidUP(DemocodeError, ValueError):
    """Uncertainty-principle parameters violate ``A > eta * sqrt(B)``."""


class InvalidDelta(DemocodeError, ValueError):
    pass


class MissingParams(DemocodeError, ValueError):
    pass


class SingularGram(DemocodeError, ArithmeticError):
    pass


class SolverFailure(DemocodeError, RuntimeError):
    pass


class NonContracting(DemocodeError, RuntimeError):
    """The truncate-and-project iteration failed to shrink its residual."""


class OutOfRange(DemocodeError, ValueError):
    pass


class BudgetTooSmall(DemocodeError, ValueError):
    pass


class HeaderMismatch(DemocodeError, ValueError):
    pass


class CorruptPayload(DemocodeError, ValueError):
    pass


class InvalidSpec(DemocodeError, ValueError):
    pass


class InvalidStepSize(DemocodeError, ValueError):
    pass


class InvalidDomain(DemocodeError, ValueError):
    pass


class BudgetExceeded(DemocodeError, RuntimeError):
    """A payload exceeded the per-iteration bit budget of the channel."""

    def __init__(self, message, ledger=None):
        super().__init__(message)
        self.ledger = list(ledger or [])


class ParseError(DemocodeError, ValueError):
    pass


class ConfigError(DemocodeError, ValueError):
    pass
