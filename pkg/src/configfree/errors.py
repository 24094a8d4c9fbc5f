"""Exception types shared across the package.

The CLI maps each class to a distinct exit code.
"""


class ConfigFreeError(Exception):
    """Base class for all package errors."""


class ConfigError(ConfigFreeError, ValueError):
    """Malformed input: bad descriptor, wrong arity, inconsistent shapes."""

    def __init__(self, message, pointer=None):
        self.pointer = pointer
        if pointer is not None:
            message = f"{message} (at {pointer or 'document root'})"
        super().__init__(message)


class BudgetExceeded(ConfigFreeError):
    """An enumeration or search would exceed its configured budget."""

    def __init__(self, message, required=None, budget=None):
        self.required = required
        self.budget = budget
        super().__init__(message)


class PreconditionError(ConfigFreeError, ValueError):
    """Input is well formed but violates a mathematical precondition."""

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)
