"""
Exception hierarchy for the quasidirac package.

Library code raises these; only the command-line front end turns them into
exit codes.
"""

from typing import Optional


class QuasiDiracError(Exception):
    """Base class for all errors raised by the package."""


class InvalidParameterError(QuasiDiracError, ValueError):
    """A parameter violates a precondition (negative order, zero spacing, ...)."""


class InsufficientPrecisionError(QuasiDiracError):
    """
    The working precision is too low for a cancellation-heavy sum.

    Attributes:
        required_digits: Digits needed for a trustworthy result
        available_digits: Digits the caller supplied
    """

    def __init__(self, required_digits: int, available_digits: int, message: Optional[str] = None):
        self.required_digits = required_digits
        self.available_digits = available_digits
        super().__init__(
            message
            or f"Working precision of {available_digits} digits is insufficient; "
               f"at least {required_digits} digits are required"
        )


class PrecisionOverflowError(QuasiDiracError, ArithmeticError):
    """A floating value left the representable exponent range (inf or nan)."""


class ZeroSelectionWeightError(QuasiDiracError, ZeroDivisionError):
    """A pre-selection weight vanishes on a channel that carries a nonzero weight."""


class DegenerateDistributionError(QuasiDiracError):
    """Spin states produce no usable delay amplitude distribution."""


class ModulusMismatchError(QuasiDiracError):
    """|a_m||b_m| does not reproduce |eta_m| for some channel."""
