"""Exception types shared across the toolkit.

The CLI maps these to exit codes: contract violations exit 2 and
refusals due to enumeration or branching caps exit 3.
"""


class ContractError(ValueError):
    """An input violates an operation's precondition."""


class ParseError(ContractError):
    """Malformed input text; the message names the offending line."""


class CapExceeded(RuntimeError):
    """An exact computation would exceed its configured size cap."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required
