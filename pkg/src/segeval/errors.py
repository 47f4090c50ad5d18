"""Exception hierarchy shared across the engine.

Each class maps to one stable CLI exit code (see :mod:`segeval.cli`), so
callers can distinguish malformed input, invariant violations, incomplete
score coverage, and filesystem trouble without string matching.
"""

from __future__ import annotations


class SegEvalError(Exception):
    """Base class for all engine errors."""


class ParseError(SegEvalError):
    """An input file is malformed (bad JSON/CSV, missing or mistyped field).

    Carries the offending source (file path) and, where known, the field or
    line so the message pinpoints the problem.
    """

    def __init__(self, message: str, *, source: str | None = None):
        if source:
            message = f"{source}: {message}"
        super().__init__(message)
        self.source = source


class ValidationError(SegEvalError):
    """Parsed data violates a structural invariant (bad graph, duplicate id)."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


class CoverageError(SegEvalError):
    """A score or answer table does not cover every required item."""

    def __init__(self, message: str, missing: list | None = None):
        super().__init__(message)
        self.missing = list(missing or [])
