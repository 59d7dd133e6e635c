"""Exception types shared across the package."""


class VarfastError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(VarfastError):
    """Operands have incompatible shapes or channel counts."""


class InvalidTarget(VarfastError):
    """Requested output geometry is not an enlargement."""


class NumericOverflow(VarfastError):
    """A non-finite value appeared mid-computation.

    Carries the index of the first offending entry when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class TooLargeToMaterialize(VarfastError):
    """Refusing to allocate a dense attention matrix this large."""


class RangeTooLarge(VarfastError):
    """No permitted polynomial degree meets the error target.

    This is the operational signature of the hard regime: the score bound is
    too large for the configured degree cap at the requested accuracy.
    """


class NonPositiveRowSum(VarfastError):
    """An approximate attention normalizer came out non-positive."""


class InsufficientData(VarfastError):
    """Not enough points for a meaningful fit."""


class ConfigError(VarfastError):
    """Rejected configuration value."""
