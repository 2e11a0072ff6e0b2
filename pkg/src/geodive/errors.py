"""Exception taxonomy shared by all modules.

The CLI maps these onto its exit codes: ConfigError -> 2, DataError -> 3,
PreconditionError -> 4.
"""


class GeodiveError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GeodiveError):
    """Run-configuration document is missing, malformed, or inconsistent."""


class DataError(GeodiveError):
    """An input file violates the embedding-file contract."""


class PreconditionError(GeodiveError):
    """An operation was called on inputs that violate its preconditions."""
