"""Exception types shared across the package.

Every error raised by the library derives from ``RegsingError`` so callers
can catch library failures without swallowing programming errors.  The CLI
maps these onto process exit codes.
"""

from __future__ import annotations


class RegsingError(Exception):
    """Base class for all library errors."""


class ExprError(RegsingError):
    """Base class for expression layer errors."""


class ParseError(ExprError):
    """Raised when the expression parser rejects its input.

    Attributes
    ----------
    line, column : int
        1-based position of the offending token.
    expected : tuple of str
        Token categories that would have been accepted at that position.
    """

    def __init__(self, message: str, line: int, column: int, expected: tuple = ()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        hint = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at line {line}, column {column}{hint}")


class EvalDomainError(ExprError):
    """Evaluation left the domain of an elementary function.

    Covers log of a nonpositive real, even roots of negative reals,
    division by zero and zero raised to a negative power.
    """


class SeriesError(RegsingError):
    """Ill-posed truncated power series operation."""


class AdmissibilityError(RegsingError):
    """Singular initial value problem rejected by the admissibility check.

    Carries the full report so callers can inspect the offending indices.
    """

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class NumericalError(RegsingError):
    """Numerical failure: step underflow, singular solve, series blow-up."""


class StructureError(RegsingError):
    """Declared singular structure is violated by the supplied data.

    Raised when a reduction that should produce a smooth remainder leaves
    an unresolved pole term, or a declared vanishing order does not hold.
    """


class ValidationError(RegsingError):
    """Metric family or problem data failed validation."""


class ConfigError(RegsingError):
    """Malformed run configuration (unknown keys, wrong types, bad values)."""
