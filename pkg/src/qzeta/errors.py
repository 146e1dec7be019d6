"""Exception types shared across the package."""


class QZetaError(Exception):
    """Base class for all package errors."""


class DomainError(QZetaError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class InvalidShift(DomainError):
    """A shifting vector is incompatible with its argument vector."""


class QuadratureFailure(QZetaError, ArithmeticError):
    """An integral could not be certified to the requested tolerance."""


class TruncationOverflow(QZetaError, ArithmeticError):
    """An infinite sum could not be truncated within the configured limits."""


class NonConvergentSum(TruncationOverflow):
    """An infinite sum in the depth recursion does not converge.

    Raised when the geometric ratio controlling the sum has modulus one at
    the requested direction, so no finite truncation reaches the tolerance.
    """

    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class ResidualPole(QZetaError, ArithmeticError):
    """A coefficient that should vanish in a limit did not.

    ``exponent`` is the offending (negative) exponent and ``magnitude`` its
    absolute value.
    """

    def __init__(self, exponent, magnitude, message=None):
        self.exponent = exponent
        self.magnitude = magnitude
        super().__init__(
            message or f"residual pole at exponent {exponent}: |c| = {float(magnitude):.3e}"
        )
