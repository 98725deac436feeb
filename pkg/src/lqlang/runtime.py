"""Outcome and trace types shared by both evaluators."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .syntax import Term


class OutcomeKind(enum.Enum):
    VALUE = "value"
    OUT_OF_FUEL = "fuel"
    BLOCKED = "blocked"
    BLACKHOLE = "blackhole"


class BlockReason(enum.Enum):
    MISSING_LINEAR_BINDING = "MissingLinearBinding"
    TYPESTATE_VIOLATION = "TypestateViolation"
    MISSING_BRANCH = "MissingBranch"
    PRIMITIVE_MISUSE = "PrimitiveMisuse"


@dataclass(frozen=True)
class TraceRecord:
    rule: str
    redex: str
    heap_delta: int = 0


@dataclass
class Outcome:
    kind: OutcomeKind
    value: Optional[Term] = None
    reason: Optional[BlockReason] = None
    rule: Optional[str] = None        # rule at which evaluation stopped
    location: Optional[str] = None    # offending variable / cell name
    detail: str = ""                  # head redex summary or explanation
    steps: int = 0

    @property
    def is_value(self) -> bool:
        return self.kind is OutcomeKind.VALUE

    def describe(self) -> str:
        match self.kind:
            case OutcomeKind.VALUE:
                from .pretty import show_term
                assert self.value is not None
                return show_term(self.value)
            case OutcomeKind.OUT_OF_FUEL:
                return f"out of fuel at: {self.detail}"
            case OutcomeKind.BLOCKED:
                assert self.reason is not None
                where = f" at {self.location}" if self.location else ""
                return (f"blocked ({self.reason.value}) in rule "
                        f"'{self.rule}'{where}: {self.detail}")
            case OutcomeKind.BLACKHOLE:
                return f"blackhole at {self.location}: {self.detail}"
        raise AssertionError(self.kind)


class EvalAbort(Exception):
    """Internal control flow: unwinds an evaluation to its driver."""

    def __init__(self, outcome: Outcome) -> None:
        super().__init__(outcome.kind.value)
        self.outcome = outcome


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)

    def add(self, rule: str, redex: str, heap_delta: int = 0) -> None:
        self.records.append(TraceRecord(rule, redex, heap_delta))
