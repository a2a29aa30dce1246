"""Exception types raised across the package."""


class GreedyBasesError(Exception):
    """Base class for all package errors."""


class InvalidIndexError(GreedyBasesError, ValueError):
    """A mixed index does not exist under the governing space."""

    def __init__(self, index, reason):
        self.index = tuple(index)
        super().__init__(f"invalid index {self.index}: {reason}")


class UnsupportedSpaceError(GreedyBasesError, ValueError):
    pass


class CapacityError(GreedyBasesError):
    """A construction or enumeration would exceed a configured size cap."""

    def __init__(self, message, hint=None):
        self.hint = hint
        super().__init__(message if hint is None else f"{message} ({hint})")


class CoefficientRecoveryError(GreedyBasesError):
    """Coefficients of a vector cannot be recovered from a basis."""


class InconsistencyError(GreedyBasesError):
    """Two quantities that must agree do not; almost always a bug."""
