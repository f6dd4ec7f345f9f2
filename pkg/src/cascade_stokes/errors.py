"""Exception hierarchy.

Errors are split in two families so the command line can map them to exit
codes: ``ValidationError`` (bad input, exit 1) and ``NumericalError``
(a computation failed, exit 2).
"""


class CascadeError(Exception):
    pass


class ValidationError(CascadeError):
    pass


class NumericalError(CascadeError):
    pass


class InvalidGeometry(ValidationError):
    pass


class NotOnBoundary(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(ValidationError):
    pass


class ConfigError(ValidationError):
    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"[{key}] {message}"
        super().__init__(message)


class UnknownCase(ValidationError):
    pass


class UnsupportedSegment(ValidationError):
    pass


class PeriodMismatch(ValidationError):
    pass


class IncompatibleCorners(ValidationError):
    pass


class ConstraintConflict(ValidationError):
    pass


class MeshFailure(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class CompatibilityFailure(NumericalError):
    pass


class SolveFailure(NumericalError):
    pass


class SingularSystem(SolveFailure):
    pass


class NonConvergence(SolveFailure):
    pass
