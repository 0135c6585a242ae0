"""Exception types shared across the package.

The CLI maps each class to a distinct exit code, so library code raises
the most specific one that applies.
"""


class SieveSpectraError(Exception):
    """Base class for all package errors."""


class ValidationError(SieveSpectraError, ValueError):
    """An argument is outside the domain of the operation."""


class ResourceGuardError(SieveSpectraError):
    """A requested size exceeds a configured resource cap."""


class ConvergenceError(SieveSpectraError):
    """A numerical procedure failed to reach its tolerance.

    ``best`` carries the last estimate when one is available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
