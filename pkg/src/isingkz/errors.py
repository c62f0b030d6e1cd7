"""Exception hierarchy shared by all solvers."""


class IsingKZError(Exception):
    """Base class for errors raised by this package."""


class DomainError(IsingKZError, ValueError):
    """An argument lies outside the domain of an operation."""


class BracketError(IsingKZError, ValueError):
    """A search bracket does not contain the sought feature."""


class NumericalError(IsingKZError, RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""


class IntegrationError(NumericalError):
    """Time integration produced a non-finite or unconverged state."""


class ConvergenceError(NumericalError):
    """An iterative solver stopped before meeting its tolerance.

    Attributes
    ----------
    residual : float
        Last residual reached before giving up.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual
