"""Exception types shared across the package.

The CLI maps them onto stable exit codes: 3 for NumericalError and its
subclasses, 4 for ReliabilityError.
"""


class NumericalError(RuntimeError):
    """A kernel failed to produce a trustworthy number."""


class ConvergenceError(NumericalError):
    """An iteration hit its cap without meeting the stopping criterion."""


class SingularMatrixError(NumericalError):
    """Matrix is singular to working tolerance."""


class ReliabilityError(RuntimeError):
    """Computed quantities failed the reliability screen."""
