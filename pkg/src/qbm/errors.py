"""Exception hierarchy shared by every module."""


class QBMError(Exception):
    """Base class for all library errors."""


class DomainError(QBMError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(QBMError, OverflowError):
    """Result would overflow double precision."""


class ConfigurationError(QBMError, ValueError):
    """Invalid or inconsistent parameter record."""


class ConvergenceError(QBMError, RuntimeError):
    """A series or quadrature failed to reach its tolerance.

    Carries the best estimate and its error bound so callers can still
    inspect what was achieved.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class IntegrationError(QBMError, RuntimeError):
    """ODE integration failed at time ``t_fail``."""

    def __init__(self, message, t_fail=float("nan")):
        super().__init__(message)
        self.t_fail = t_fail


class AnsatzBreakdownError(IntegrationError):
    """The Gaussian state lost positivity (2a - C <= 0 or 2a + C <= 0)."""


class StiffnessError(IntegrationError):
    """Step size underflow; the problem is too stiff for the integrator."""
