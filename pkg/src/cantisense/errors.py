"""Exception types shared across the simulator."""
from __future__ import annotations

from typing import Any, NamedTuple


class Issue(NamedTuple):
    """One violated constraint: where, what was given, what was required."""

    path: str
    value: Any
    constraint: str

    def __str__(self):
        return f"{self.path}: must satisfy {self.constraint} (got {self.value!r})"


class ValidationError(ValueError):
    """A parameter or configuration violates a model invariant.

    ``issues`` lists every violation found, not just the first.
    """

    def __init__(self, issues: "list[Issue] | str"):
        if isinstance(issues, str):
            issues = [Issue("", None, issues)]
        self.issues = list(issues)
        super().__init__("; ".join(str(i) if i.path else i.constraint for i in self.issues))

    def prefixed(self, prefix: str) -> "ValidationError":
        return ValidationError([i._replace(path=f"{prefix}.{i.path}" if i.path else prefix)
                                for i in self.issues])


class Checker:
    """Collects constraint violations, then raises them together."""

    def __init__(self):
        self.issues: list[Issue] = []

    def require(self, ok: bool, path: str, value: Any, constraint: str) -> None:
        if not ok:
            self.issues.append(Issue(path, value, constraint))

    def done(self) -> None:
        if self.issues:
            raise ValidationError(self.issues)


class SimulationError(RuntimeError):
    """A simulation ran but did not produce a usable result."""


class NoOscillationError(SimulationError):
    pass


class NotSettledError(SimulationError):
    pass


class NoSignalError(SimulationError):
    """Too few threshold crossings for a frequency estimate."""


class OffsetRangeError(SimulationError):
    """Offset cannot be nulled inside the DAC range."""
