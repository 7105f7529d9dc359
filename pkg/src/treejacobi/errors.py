"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 1,
numerical failures exit 2, refused classifications exit 3.
"""


class TreeJacobiError(Exception):
    """Base class for all package errors."""


class GraphValidationError(TreeJacobiError):
    """Malformed graph data or parameter arrays (CLI exit code 1)."""


class ConvergenceError(TreeJacobiError):
    """A fixed-point solve failed to converge or left the Herglotz class."""


class NumericalError(TreeJacobiError):
    """A numerical procedure other than the basic solve failed.

    Covers contour step underflow, pole/zero factors inside a product,
    incomplete density coverage, non-integer fitted local orders.
    """


class RefusedClassificationError(TreeJacobiError):
    """Eigenvector-support classification refused due to ambiguous weights
    (CLI exit code 3)."""
