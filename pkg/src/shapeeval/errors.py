"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or inconsistent input data.

    ``line`` is the 1-based line number in ``path`` when the problem can be
    pinned to one.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:"
            if line is not None:
                location += f"{line}:"
            location += " "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(location + message)


class EvaluationError(RuntimeError):
    """Inputs parsed fine but no meaningful evaluation can be produced."""


class InputWarning(UserWarning):
    """Recoverable input problem (self-matches, unclassified results, ...)."""


class UndefinedMeasureError(EvaluationError, ValueError):
    """A measure was requested for a query with no relevant objects (R = 0)."""
