"""Exception types raised by the lab."""


class RflError(Exception):
    """Base class for all lab errors."""


class GridMismatch(RflError):
    pass


class CflViolation(RflError):
    """Explicit step refused because dt exceeds the stability bound."""

    def __init__(self, message, time=None, dt=None, bound=None):
        super().__init__(message)
        self.time = time
        self.dt = dt
        self.bound = bound


class ExtinctionReached(RflError):
    pass


class NonPositiveRadius(RflError):
    pass


class NodeEncountered(RflError):
    pass


class NonPositiveDensity(RflError):
    pass


class TooFewSteps(RflError):
    pass


class ConfigInvalid(RflError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
