"""Exception hierarchy.

Every error carries a stable machine-readable ``code`` and the CLI exit
status it maps to (2 for input/validation problems, 3 for degenerate
statistics).
"""

from __future__ import annotations


class RankMctpError(Exception):
    code = "ERROR"
    exit_code = 2

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "details": self.details}


class ValidationError(RankMctpError, ValueError):
    code = "VALIDATION"


class MissingCell(ValidationError):
    code = "MISSING_CELL"


class DuplicateCell(ValidationError):
    code = "DUPLICATE_CELL"


class NonNumericValue(ValidationError):
    code = "NON_NUMERIC_VALUE"


class FewerThanTwoSubjects(ValidationError):
    code = "FEWER_THAN_TWO_SUBJECTS"


class GroupTooSmall(ValidationError):
    code = "GROUP_TOO_SMALL"


class EmptyInput(ValidationError):
    code = "EMPTY_INPUT"


class DimensionMismatch(ValidationError):
    code = "DIMENSION_MISMATCH"


class DimensionTooSmall(ValidationError):
    code = "DIMENSION_TOO_SMALL"


class NotACorrelationMatrix(ValidationError):
    code = "NOT_A_CORRELATION_MATRIX"


class InvalidDegrees(ValidationError):
    code = "INVALID_DEGREES"


class BadConfig(ValidationError):
    code = "BAD_CONFIG"


class BadAlpha(BadConfig):
    code = "BAD_ALPHA"


class NonPsdV(ValidationError):
    code = "NON_PSD_V"


class DegenerateStatistic(RankMctpError, ArithmeticError):
    code = "DEGENERATE"
    exit_code = 3


class DegenerateVariance(DegenerateStatistic):
    code = "DEGENERATE_VARIANCE"


class DegenerateTrace(DegenerateStatistic):
    code = "DEGENERATE_TRACE"


class TooManyDegenerateReplicates(DegenerateStatistic):
    code = "TOO_MANY_DEGENERATE_REPLICATES"


class UnboundedInterval(DegenerateStatistic):
    code = "UNBOUNDED_INTERVAL"


class DenominatorNearZero(UserWarning):
    """Denominator contrast is not clearly separated from zero."""
