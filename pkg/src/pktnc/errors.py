"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """A parameter is outside the domain an operation is defined on."""


class InstabilityError(ValueError):
    """A requested bound is infinite because the input outruns the service.

    Raised when a supremum diverges, e.g. deconvolving a token bucket whose
    long-run rate exceeds the service rate, or asking for a delay bound the
    server can never meet.
    """


class UnsupportedCurveError(ValueError):
    """The exact algorithm does not cover this curve shape.

    The message points at the pointwise evaluator that does.
    """


class TraceFormatError(ValueError):
    """A trace file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
