"""Exception hierarchy.

Each class carries the CLI exit code it maps to, so command handlers can
translate library failures without a lookup table.
"""


class QCAError(Exception):
    exit_code = 1


class ConfigParseError(QCAError, ValueError):
    """Malformed configuration text or schema (unknown key, wrong shape)."""

    exit_code = 2


class ConfigurationError(QCAError, ValueError):
    """A model or lattice that is well-formed but physically invalid."""

    exit_code = 3


class UsageError(QCAError, ValueError):
    """An operation called with arguments violating its preconditions."""

    exit_code = 3


class ResourceError(QCAError, MemoryError):
    """Requested size exceeds a configured simulation cap."""

    exit_code = 4


class UnsupportedStructureError(QCAError, NotImplementedError):
    """A transpiler direction or model structure that is not handled."""

    exit_code = 5
