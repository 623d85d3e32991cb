"""Exception types shared across the toolkit.

Each class carries the CLI exit code it maps to.
"""


class UmbraError(Exception):
    exit_code = 1


class ArgumentError(UmbraError, ValueError):
    """Malformed input: wrong shapes, out-of-range parameters."""

    exit_code = 2


class OutOfRangeError(ArgumentError):
    pass


class NonConvergenceError(UmbraError, ArithmeticError):
    exit_code = 3


class DegeneratePointError(UmbraError):
    """Second fundamental form not positive definite, or a vanishing field."""

    exit_code = 3


class OrderUnavailableError(UmbraError):
    exit_code = 2


class DegenerateCurveError(UmbraError):
    exit_code = 3


class SourceAtInfinity(UmbraError):
    """The requested light source lies at infinity."""

    exit_code = 2


class ApertureDegenerateError(UmbraError):
    exit_code = 3


class HypothesisError(UmbraError):
    """The hypotheses of a reconstruction step fail; says nothing about the body itself."""

    exit_code = 4

    def __init__(self, message: str = "", details: dict | None = None):
        super().__init__(message)
        self.details = {} if details is None else details


class InconclusiveConfiguration(HypothesisError):
    pass


class DegenerateConfiguration(HypothesisError):
    pass
