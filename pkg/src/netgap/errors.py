"""Exception types shared across the package."""


class NetgapError(Exception):
    """Base class for all package-specific errors."""


class InputError(NetgapError):
    """Malformed or inconsistent user input (models, catalogs, configs)."""


class GrammarParseError(InputError):
    """Raised when grammar text cannot be parsed.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}" + (f", col {column}" if column is not None else "") + f": {message}"
        super().__init__(message)


class StaleActionError(NetgapError):
    """An action was applied to a graph it no longer matches."""


class InfeasibleModelError(NetgapError):
    """The allocation instance cannot be satisfied by construction.

    Raised before any search is attempted, e.g. when total compute demand
    exceeds the combined capacity of every candidate slot.
    """
