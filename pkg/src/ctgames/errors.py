"""Exception types shared across the package."""


class CTGamesError(Exception):
    """Base class for all library errors."""


class DomainError(CTGamesError, ValueError):
    """A time point lies outside the domain of a step function."""


class UsageError(CTGamesError, ValueError):
    """An operation was called with arguments violating its contract."""


class ProtocolError(CTGamesError, RuntimeError):
    """A game transcript or responder violated the round ordering."""


class ConfigError(CTGamesError, ValueError):
    """An unknown responder name or invalid experiment configuration."""


class SpecParseError(CTGamesError, ValueError):
    """A model or strategy spec file could not be parsed."""


class InconsistencyError(CTGamesError, RuntimeError):
    """Observed play is inconsistent with every atom; signals an engine bug."""
