"""Exception hierarchy shared by every module of the toolkit."""


class FinslerNavError(Exception):
    """Base class for all errors raised by finslernav."""


# expressions


class ExprSyntaxError(FinslerNavError):
    """Malformed expression text; ``offset`` is a byte offset into the input."""

    def __init__(self, offset, message, text=None):
        self.offset = offset
        self.message = message
        self.text = text
        super().__init__(f"{message} (at byte {offset})")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class DimensionOutOfRangeError(ExprSyntaxError):
    pass


class DomainError(FinslerNavError, ValueError):
    """A function was applied outside its (smooth) domain."""


class EvaluationError(FinslerNavError):
    pass


# Riemannian layer


class NotPositiveDefiniteError(FinslerNavError):
    pass


class GuardViolatedError(FinslerNavError):
    pass


class DegeneratePlaneError(FinslerNavError):
    pass


# Finsler layer


class OutsideConeError(FinslerNavError):
    pass


class ZeroVectorError(FinslerNavError):
    pass


class DimensionTooSmallError(FinslerNavError):
    pass


class SingularFundamentalTensorError(FinslerNavError):
    pass


class DegenerateFlagError(FinslerNavError):
    pass


# navigation


class NoBracketError(FinslerNavError):
    pass


class NonConvergenceError(FinslerNavError):
    pass


class RegimeMismatchError(FinslerNavError):
    pass


class DegenerateBetaError(FinslerNavError):
    pass


class ConeViolationError(FinslerNavError):
    pass


class SpeedLimitError(FinslerNavError):
    pass


class MixedRegimeError(FinslerNavError):
    pass


# models / specs


class CertificateFailure(FinslerNavError):
    pass


class SpecError(FinslerNavError):
    """Invalid ManifoldSpec content."""
