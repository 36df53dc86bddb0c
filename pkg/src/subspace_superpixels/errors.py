"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class NumericalError(ArithmeticError):
    """Raised when an iterate stops being finite.

    ``stage`` names the update or pipeline step that produced the bad
    values so that callers can report it.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
