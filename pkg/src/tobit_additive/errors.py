"""Exception hierarchy shared by all modules."""


class TobitError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(TobitError, ValueError):
    """An argument is outside the domain an operation accepts."""


class FitError(TobitError):
    """A model could not be fitted to the supplied data."""


class DegenerateData(FitError):
    """The data carry no usable information (e.g. everything is censored)."""


class DegenerateDesign(FitError):
    """The spline design matrix is rank deficient."""


class InsufficientData(DegenerateDesign):
    """Fewer rows than design columns."""


class NonConvergence(FitError):
    """The optimizer failed, even after the fallback restart."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InvalidStart(TobitError):
    """Objective or gradient is not finite at the starting point."""


class SelectionFailure(TobitError):
    """Every candidate in a cross-validation grid failed."""


class ExperimentFailure(TobitError):
    """Too many replicate fits failed in a simulation cell."""
