"""Diagnostics: structured rejection reports with source locations."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .syntax import Loc


class Kind(enum.Enum):
    UNBOUND_VARIABLE = "UnboundVariable"
    LINEARITY_MISMATCH = "LinearityMismatch"
    UNJOINABLE_USAGE = "UnjoinableUsage"
    ARITY_MISMATCH = "ArityMismatch"
    TYPE_MISMATCH = "TypeMismatch"
    FRESHNESS_VIOLATION = "FreshnessViolation"
    MALFORMED_DECL = "MalformedDecl"
    SYNTAX = "Syntax"


@dataclass(frozen=True)
class Diagnostic:
    kind: Kind
    message: str
    loc: Optional[Loc] = None

    def __str__(self) -> str:
        where = str(self.loc) if self.loc else "?"
        return f"{where}: {self.kind.value}: {self.message}"


class CheckError(Exception):
    """Raised on rejection; carries one or more diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]) -> None:
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics

    @classmethod
    def single(cls, kind: Kind, message: str,
               loc: Optional[Loc] = None) -> "CheckError":
        return cls([Diagnostic(kind, message, loc)])
