"""Exception hierarchy shared by every stage of the pipeline."""


class MultiCGError(Exception):
    """Base class for all errors raised by this package."""


class InputError(MultiCGError, ValueError):
    """Malformed, missing or inconsistent input data."""


class EmptyCorpusError(InputError):
    """Parsing produced no usable mention records."""


class NumericalError(MultiCGError, ArithmeticError):
    """A numerical routine produced a non-finite value."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
