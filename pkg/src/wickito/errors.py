"""Exception hierarchy.

Parameter-type problems derive from ``ValueError``; numerical accuracy
problems derive from ``ArithmeticError``. The CLI maps the former to exit
code 2 and the latter to exit code 3.
"""


class ParameterError(ValueError):
    """Invalid argument or configuration."""


class DomainError(ParameterError):
    """Argument outside the mathematical domain of the operation."""


class DimensionError(ParameterError):
    """Sizes of operands are incompatible."""


class RangeError(ParameterError):
    """Evaluation point outside the precomputed range."""


class DivergenceError(ParameterError):
    """The requested series or integral does not converge."""


class TruncationOverflowError(ParameterError):
    """A result would exceed the configured index or term cap."""


class AccuracyError(ArithmeticError):
    """A numerical routine could not reach the requested accuracy."""


class ResolutionError(AccuracyError):
    """A grid is too coarse for the requested operation."""
