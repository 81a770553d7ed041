"""Exception types shared across the package."""


class KAConvError(Exception):
    """Base class for every error raised deliberately by this package."""

    kind = "error"


class InvalidArgument(KAConvError, ValueError):
    kind = "invalid-argument"


class InvalidState(KAConvError, RuntimeError):
    kind = "invalid-state"


class NumericFailure(KAConvError, FloatingPointError):
    kind = "numeric-failure"


class ParseError(KAConvError, ValueError):
    kind = "parse-error"

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class UnsupportedModel(KAConvError, TypeError):
    kind = "unsupported-model"
