"""Exception hierarchy shared by the library and the CLI."""


class RoughSigError(Exception):
    """Base class for all library errors."""


class InputError(RoughSigError, ValueError):
    """Invalid or inconsistent input data (CLI exit code 2)."""


class DimensionMismatch(InputError):
    pass


class LevelCapError(InputError):
    pass


class NumericalError(RoughSigError, ArithmeticError):
    """A computation failed numerically (CLI exit code 3)."""
