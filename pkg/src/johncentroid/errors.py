"""Exception hierarchy shared by every module."""


class GeometryError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GeometryError, ValueError):
    """Malformed or out-of-range arguments."""


class DomainError(InputError):
    """An argument lies outside the domain of a formula."""


class ConstructionError(GeometryError):
    """A body could not be built, e.g. empty interior."""


class ConvergenceError(GeometryError):
    """An iterative solver stopped before reaching its tolerance.

    ``best`` holds the last iterate so callers can inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class CertificationError(GeometryError):
    """A John decomposition could not be certified."""


class SamplingError(GeometryError):
    """A sampler could not produce points (bad start, unbounded chord, ...)."""
