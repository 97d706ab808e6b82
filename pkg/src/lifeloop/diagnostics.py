"""Shared diagnostic records for script parsing, compilation and graph checks."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Span:
    """Half-open source range; lines and columns are 1-based."""

    line: int
    col: int
    end_line: int
    end_col: int

    def covers(self, line: int, col: int) -> bool:
        if (line, col) < (self.line, self.col):
            return False
        return (line, col) < (self.end_line, self.end_col)


@dataclass(frozen=True)
class Diagnostic:
    """One finding. `subject` names a graph node/edge when no source span exists."""

    severity: Severity
    code: str
    message: str
    span: Span | None = None
    subject: str | None = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def render(self, path: str = "<graph>") -> str:
        loc = f"{path}:{self.span.line}:{self.span.col}" if self.span else path
        msg = self.message if self.subject is None else f"{self.message} ({self.subject})"
        return f"{loc}: {self.severity.value}[{self.code}]: {msg}"


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)
