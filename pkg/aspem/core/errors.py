# aspem/core/errors.py
"""
Exception hierarchy.

Every error raised by the library derives from ``AspemError``, which itself
subclasses ``ValueError`` so callers that only care about "bad input" can
catch the builtin. The CLI maps any ``AspemError`` to exit code 1.
"""

from pathlib import Path
from typing import Optional, Union


class AspemError(ValueError):
    """Base class for all library errors."""


class ParseError(AspemError):
    """
    A malformed record in one of the text formats.

    Attributes:
        path: file being parsed (may be None for in-memory input)
        line: 1-based line number
        field: name of the offending field
    """

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        self.path = str(path) if path is not None else None
        self.line = line
        self.field = field
        location = []
        if self.path is not None:
            location.append(self.path)
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = ", ".join(location)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class GraphError(AspemError):
    """Inconsistent graph content: dangling ids, type mismatches, unknown nodes."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message)


class SelectionError(AspemError):
    """Aspect scoring or selection cannot proceed."""


class TrainingError(AspemError):
    """Embedding training cannot proceed."""


class BundleError(AspemError):
    """Embedding files or bundle manifests are inconsistent."""


class EvaluationError(AspemError):
    """Evaluation harness received invalid input."""
