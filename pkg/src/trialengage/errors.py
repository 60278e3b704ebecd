"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, anything raised as a
:class:`ValidationError` (including subclasses) exits 2, and failed verification
expectations exit 3 without an exception.
"""


class ValidationError(ValueError):
    """A specification, dataset, or configuration violates a documented contract."""


class PositivityError(ValidationError):
    """An estimated or structural probability leaves its required open interval.

    Raised when trial-participation positivity (condition A5) or treatment-
    assignment positivity (condition A4) fails in the data at hand, e.g. an
    empty treatment arm inside a covariate stratum of the trial, or a fitted
    probability outside (eps_w, 1 - eps_w).
    """


class EstimationError(ValidationError):
    """An estimator's preconditions are not met by the dataset it was given."""


class ConvergenceError(RuntimeError):
    """An iterative fit stopped without satisfying its convergence contract."""
