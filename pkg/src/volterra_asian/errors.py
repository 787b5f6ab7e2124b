"""Exception hierarchy shared across the package."""


class VolterraAsianError(Exception):
    """Base class for all package errors."""


class DomainError(VolterraAsianError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class NumericFailure(VolterraAsianError, ArithmeticError):
    """A numerical scheme failed to produce a trustworthy value."""


class MittagLefflerError(NumericFailure):
    def __init__(self, alpha, beta, z, reason="no convergent evaluation scheme"):
        self.alpha, self.beta, self.z = alpha, beta, z
        super().__init__(f"Mittag-Leffler E_{{{alpha},{beta}}}({z}): {reason}")


class AccuracyFailure(NumericFailure):
    """Quadrature could not reach the requested tolerance."""

    def __init__(self, message, error_estimate):
        self.error_estimate = error_estimate
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")


class DivergenceError(NumericFailure):
    """A time-stepping scheme produced non-finite values."""

    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class InvariantViolation(NumericFailure):
    """A computed solution breaks a property the exact solution must satisfy."""
