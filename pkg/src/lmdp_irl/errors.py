"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError -> 1, NumericalError -> 2.
"""


class ValidationError(ValueError):
    """Raised when an input violates a structural contract (shape, schema, mass)."""


class NumericalError(RuntimeError):
    """Raised when an iterative method fails (non-convergence, collapse, divergence)."""
