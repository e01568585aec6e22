"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``InputError`` -> 1,
``PreconditionError`` -> 2, ``ConvergenceError`` -> 3.
"""


class LogHestonError(Exception):
    """Base class for package errors."""


class InputError(LogHestonError, ValueError):
    """Malformed or inconsistent input data."""


class DataError(InputError):
    """A data file could not be parsed.

    Carries the file name and line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class DegenerateError(InputError):
    """A statistic or regression is undefined for constant input."""


class PreconditionError(LogHestonError, ValueError):
    """A mathematical precondition is violated (e.g. outside the MGF domain)."""


class ConvergenceError(LogHestonError, RuntimeError):
    """A numerical procedure failed to converge."""
