"""Exception types raised across the package."""


class RisChannelError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(RisChannelError, ValueError):
    pass


class IntegrityError(RisChannelError, ValueError):
    """A design references data that does not exist (e.g. an unknown state id)."""


class DomainError(RisChannelError, ValueError):
    """Geometry outside the region where a field expression is valid."""


class EvanescentError(DomainError):
    """The squinted beam direction has no real solution."""


class ConfigError(RisChannelError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
