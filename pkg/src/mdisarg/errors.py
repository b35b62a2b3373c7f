"""Exception hierarchy shared by all modules."""


class MdiSargError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MdiSargError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(MdiSargError):
    """The requested photon number exceeds the expansion limit."""


class DegenerateTotalsError(MdiSargError):
    """Total gain is zero, so the total error rate is undefined."""


class ConfigError(MdiSargError, ValueError):
    """Invalid sweep or study configuration."""


class NoKeyAtOriginError(MdiSargError):
    """The key rate is already zero at the start of the search interval."""


class BracketExceededError(MdiSargError):
    """The key rate is still positive at the end of the search interval."""
