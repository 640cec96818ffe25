"""Audit reports: a list of named checks plus free-form measured data."""
from __future__ import annotations

from dataclasses import dataclass, field

PROVEN_NOTE = ("Every checked inequality is a proven statement; a FAIL at the stated "
                "tolerance points to an implementation bug, not to new physics.")


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    bound: float | None = None
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": self.value,
                "bound": self.bound, "detail": self.detail}


@dataclass
class AuditReport:
    name: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=None, bound=None, detail=""):
        c = Check(name, bool(passed), None if value is None else float(value),
                  None if bound is None else float(bound), detail)
        self.checks.append(c)
        return c

    def to_dict(self):
        return {"audit": self.name, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks],
                "data": self.data, "notes": list(self.notes) + [PROVEN_NOTE]}

    def to_text(self):
        rows = [("check", "status", "value", "bound")]
        for c in self.checks:
            rows.append((c.name, "PASS" if c.passed else "FAIL",
                         "" if c.value is None else f"{c.value:.6g}",
                         "" if c.bound is None else f"{c.bound:.6g}"))
        widths = [max(len(r[k]) for r in rows) for k in range(4)]
        lines = [f"audit: {self.name}  ->  {'PASS' if self.passed else 'FAIL'}"]
        for r in rows:
            lines.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
        for n in list(self.notes) + [PROVEN_NOTE]:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"
