"""Exception types raised across the package."""


class InvalidPovmError(ValueError):
    """A set of effects violates positivity, completeness or size requirements."""


class DegenerateInputError(ValueError):
    """Input vectors span a lower-dimensional space than the construction needs."""


class DescentViolationError(RuntimeError):
    """A block-coordinate sweep increased the cost beyond tolerance."""
