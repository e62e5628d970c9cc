"""Exception hierarchy; each maps onto one CLI exit code."""


class ArskError(Exception):
    exit_code = 1


class InvalidParameterError(ArskError, ValueError):
    exit_code = 2


class InvalidInputError(ArskError, ValueError):
    exit_code = 2


class ParseError(InvalidInputError):
    """Raised for malformed CSV/JSON input; carries the offending location."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if column is not None:
                loc += f", column {column}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class DegenerateWeightsError(ArskError):
    """Every variable weight was thresholded to zero (lambda2 too large)."""

    exit_code = 3


class NonConvergenceError(ArskError):
    exit_code = 4


class TuningFailedError(ArskError):
    exit_code = 5


class DegenerateStructureError(ArskError):
    """Weighted robust between-cluster sum of squares is not positive."""

    exit_code = 3
