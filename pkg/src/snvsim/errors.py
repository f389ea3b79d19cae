"""Exception types shared across the package.

Every error carries a stable ``name`` (its class name) so the CLI can
report structured failures without string matching.
"""


class SnvsimError(Exception):
    """Base class for all package errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# numerics
class NotHermitian(SnvsimError):
    pass


class DimensionOutOfRange(SnvsimError):
    pass


class SingularNormalEquations(SnvsimError):
    def __init__(self, message, damping_history=()):
        super().__init__(message)
        self.damping_history = tuple(damping_history)


class NonFiniteState(SnvsimError):
    pass


# defect model
class ZeroAxis(SnvsimError):
    pass


class UnnormalizedState(SnvsimError):
    pass


# spectra
class MismatchedField(SnvsimError):
    pass


class EmptyGrid(SnvsimError):
    pass


# dynamics
class UnknownLine(SnvsimError):
    pass


class LengthMismatch(SnvsimError):
    pass


# fitting
class FitDiverged(SnvsimError):
    pass


class InsufficientData(SnvsimError):
    pass


class AssignmentAmbiguous(SnvsimError):
    pass


# CSV / config ingestion
class MissingColumn(SnvsimError):
    def __init__(self, column):
        super().__init__(f"missing column {column!r}")
        self.column = column


class BadNumber(SnvsimError):
    def __init__(self, line, column, value=""):
        super().__init__(f"bad number {value!r} at line {line}, column {column!r}")
        self.line = line
        self.column = column


class EmptyFile(SnvsimError):
    pass


class BadConfig(SnvsimError):
    pass
