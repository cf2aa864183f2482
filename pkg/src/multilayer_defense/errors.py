"""Exception types shared across the simulator."""


class DefenseSimError(Exception):
    """Base class for simulator errors."""


class DegenerateGeometryError(DefenseSimError, ValueError):
    """Raised when two positions that must differ coincide."""


class EpisodeOver(DefenseSimError):
    """Signal that the missile has no fuel left to advance another step."""


class RejectedActionError(DefenseSimError):
    """An action asked for more of a resource than remains.  Nothing is consumed."""


class ConfigError(DefenseSimError, ValueError):
    """Invalid scenario configuration.  ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
