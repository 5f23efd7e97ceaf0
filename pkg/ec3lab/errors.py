"""
Exception hierarchy for ec3lab and its mapping onto CLI exit codes
"""

from enum import Enum
from typing import Any, Dict, Optional, Sequence


class ErrorCategory(Enum):
    USAGE = "usage"
    DOMAIN = "domain"
    NUMERIC = "numeric"
    IO = "io"
    UNKNOWN = "unknown"


class Ec3LabError(Exception):
    """Base class for every error raised by the library"""

    category = ErrorCategory.UNKNOWN


class ConfigurationError(Ec3LabError):
    """Raised when environment or file configuration is invalid"""

    category = ErrorCategory.USAGE

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__(f"Configuration validation failed: {', '.join(self.problems)}")


class UsageError(Ec3LabError):
    """Incomplete or contradictory command-line arguments"""

    category = ErrorCategory.USAGE


class InstanceParseError(Ec3LabError):
    """Malformed instance document"""

    category = ErrorCategory.USAGE

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class InstanceValidationError(Ec3LabError):
    """Instance document parsed but breaks an instance invariant"""

    category = ErrorCategory.USAGE

    def __init__(self, message: str, clause_index: Optional[int] = None, clause: Optional[Sequence[int]] = None):
        self.clause_index = clause_index
        self.clause = tuple(clause) if clause is not None else None
        if clause_index is not None:
            message = f"clause #{clause_index + 1} {list(self.clause or ())}: {message}"
        super().__init__(message)


class CapExceededError(Ec3LabError):
    """Refusal of an exponential or dense operation beyond its configured cap"""

    category = ErrorCategory.DOMAIN

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(
            f"{what} refused: size {size} exceeds cap {cap} (cost grows as 2^size)"
        )


class DomainError(Ec3LabError, ValueError):
    """Argument outside its mathematical domain"""

    category = ErrorCategory.DOMAIN


class SignalSyntaxError(Ec3LabError, ValueError):
    """Unparsable signal or RTF rule syntax"""

    category = ErrorCategory.USAGE


class ScheduleValidationError(Ec3LabError, ValueError):
    """Schedule configuration breaks one or more validation rules"""

    category = ErrorCategory.USAGE

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__(f"Invalid schedule: {'; '.join(self.problems)}")


class NumericError(Ec3LabError):
    """Numerical invariant violated during a computation"""

    category = ErrorCategory.NUMERIC


class NormDriftError(NumericError):
    def __init__(self, norm: float, tolerance: float, step: Optional[int] = None):
        self.norm = norm
        self.tolerance = tolerance
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"State norm drifted to {norm:.15g}{where}; tolerance is {tolerance:g}"
        )


class EigensolverError(NumericError):
    def __init__(self, message: str, dimension: int, diagnostics: Optional[Dict[str, Any]] = None):
        self.dimension = dimension
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} (dimension {dimension}, diagnostics {self.diagnostics})")


EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2


def classify_error(error: BaseException) -> ErrorCategory:
    """Classify an exception for reporting"""
    if isinstance(error, Ec3LabError):
        return error.category
    if isinstance(error, (OSError, UnicodeDecodeError)):
        return ErrorCategory.IO
    if isinstance(error, (ValueError, TypeError)):
        return ErrorCategory.USAGE
    return ErrorCategory.UNKNOWN
