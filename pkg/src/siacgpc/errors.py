"""Exception types raised by the pipeline."""


class ArgumentError(ValueError):
    """An argument is outside the domain of the operation."""


class ConfigurationError(ValueError):
    """A case or kernel configuration cannot be realised."""


class StateError(RuntimeError):
    """A multi-field is in the wrong representation for the operation."""


class DegenerateSystemError(ValueError):
    """The gPC system matrix has no nonzero eigenvalue."""


class InstabilityError(RuntimeError):
    """Non-finite values appeared during time integration."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state after step {step}")
