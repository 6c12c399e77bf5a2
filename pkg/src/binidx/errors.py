"""Exception types shared across the package."""


class BinidxError(Exception):
    """Base class for all errors raised by binidx."""


class DimensionError(BinidxError, ValueError):
    """Shapes are non-positive or do not agree."""


class ArgumentError(BinidxError, ValueError):
    """A scalar argument is outside its allowed range."""


class DomainError(BinidxError, ValueError):
    """Input values violate a mathematical precondition (e.g. negative magnitudes)."""


class CapacityError(BinidxError, ValueError):
    """A codec cannot represent the input (e.g. too many columns for 16-bit indices)."""


class OptimizationError(BinidxError, RuntimeError):
    """No feasible sweep point was found."""


class PlanError(BinidxError, ValueError):
    """A tiling plan does not fit the matrix it is applied to."""


class FormatError(BinidxError, ValueError):
    """A binary file is malformed, truncated or has the wrong magic/version."""
