"""Exception types raised across the package."""


class DCMError(Exception):
    """Base class for all package errors."""


class ShapeError(DCMError, ValueError):
    pass


class DegenerateInputError(DCMError, ValueError):
    """Input is zero or otherwise carries no usable direction."""


class InvalidDensityError(DCMError, ValueError):
    pass


class ResolutionError(DCMError, ValueError):
    """The micro grid is too coarse to give every subinterval a grid point."""


class DegenerateEstimateError(DCMError, ValueError):
    """The macro covariance has (numerically) zero trace."""


class HypothesisViolationError(DCMError, ValueError):
    """A precondition of a closed-form route (e.g. orthonormal reference vectors) does not hold."""


class IngestError(DCMError, ValueError):
    """Malformed or incomplete time-series input.

    ``line`` is set for parse failures, ``empty_windows`` for windows that
    received no samples.
    """

    def __init__(self, message, *, line=None, empty_windows=None):
        super().__init__(message)
        self.line = line
        self.empty_windows = list(empty_windows or [])


class ScenarioError(DCMError, ValueError):
    """Invalid scenario document; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
