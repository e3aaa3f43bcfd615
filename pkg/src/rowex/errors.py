"""Exception hierarchy shared by every rowex module.

The CLI maps these onto exit codes: input, domain, and resource problems
exit with code 2; inference failures (zero evidence, impossible
conditioning) exit with code 3.
"""


class RowexError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RowexError):
    """Malformed or inconsistent input (bad weights, unknown symbol, ...)."""


class DomainError(RowexError):
    """Structurally valid input outside an operation's domain (empty row, ...)."""


class ResourceError(RowexError):
    """A configured enumeration cap would be exceeded."""


class InferenceError(RowexError):
    """The conditioning event has probability zero (no posterior exists)."""
