"""Exception types shared across the package."""


class HypermatchError(Exception):
    """Base class for errors raised by this package."""


class NotUniquelyExtendableError(HypermatchError):
    """The matching has no half-layer structure, or the direction-wise
    completion collides with already covered vertices."""


class UnsupportedFallbackError(HypermatchError):
    """A construction branch needs a full-cube exact search beyond the
    configured dimension cap."""


class ConjectureCounterexampleError(HypermatchError):
    """An exact sub-search came back empty where the verified base-case
    guarantees promise a solution.  Carries the offending instance."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance
