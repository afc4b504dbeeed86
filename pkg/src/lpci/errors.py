"""Exception hierarchy shared across the package."""


class LpciError(Exception):
    """Base class for all errors raised by lpci."""


class NotPsd(LpciError):
    """A matrix expected to be positive semi-definite is not."""


class DimensionMismatch(LpciError, ValueError):
    pass


class DomainError(LpciError, ValueError):
    pass


class EmptyInput(LpciError, ValueError):
    pass


class SolveFailure(LpciError):
    """A Cholesky-based linear solve failed (non-SPD system or non-finite input)."""


class NonFinite(LpciError, ValueError):
    pass


class InsufficientData(LpciError, ValueError):
    pass
