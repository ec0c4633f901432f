"""Exception types shared across the package."""


class MakeItSoError(Exception):
    """Base class for all package errors."""


class ContractViolationError(MakeItSoError, ValueError):
    """An operation was called with inputs that break its preconditions."""


class ConfigError(MakeItSoError, ValueError):
    """An architecture or run configuration is invalid."""


class IncompatibleArchitectureError(MakeItSoError, ValueError):
    """Two parameter sets with different architecture hashes were combined."""


class CheckpointFormatError(MakeItSoError, ValueError):
    """A checkpoint file is corrupt or not a recognized container."""


class BankFormatError(MakeItSoError, ValueError):
    """An edit-bank file violates the bank schema.

    ``field_path`` names the offending field, e.g. ``directions[2].offsets``.
    """

    def __init__(self, message: str, field_path: str = ""):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class NonFiniteLossError(MakeItSoError, ArithmeticError):
    """Optimization produced a NaN/Inf loss; carries the trace so far."""

    def __init__(self, message: str, iteration: int, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace
