"""Verification report entries and their JSON-lines serialization.

A report is a header line, one line per entry, and a summary line.  Keys
are sorted, entries are ordered by check name then inputs, non-finite
floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``, and nothing
time-dependent is written, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import __version__


def _clean(x: Any) -> Any:
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int,)):
        return int(x)
    if isinstance(x, float) or hasattr(x, "__float__") and not isinstance(x, complex):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(x, complex):
        return {"re": _clean(x.real), "im": _clean(x.imag)}
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "to_dict"):
        return _clean(x.to_dict())
    return str(x)


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class ReportEntry:
    """One checked relation ``lhs <= rhs`` (or equality), with ``slack = rhs - lhs``."""

    check: str
    inputs: dict
    lhs: Any
    rhs: Any
    slack: float
    verdict: bool
    note: str = ""

    def to_dict(self) -> dict:
        d = {"check": self.check, "inputs": self.inputs, "lhs": self.lhs, "rhs": self.rhs,
             "slack": self.slack, "verdict": "pass" if self.verdict else "fail"}
        if self.note:
            d["note"] = self.note
        return d

    def sort_key(self) -> tuple:
        return (self.check, dumps(self.inputs))


@dataclass
class Report:
    config: dict
    entries: list = field(default_factory=list)

    def extend(self, entries: Iterable[ReportEntry]) -> None:
        self.entries.extend(entries)

    @property
    def passed(self) -> int:
        return sum(1 for e in self.entries if e.verdict)

    @property
    def failed(self) -> int:
        return len(self.entries) - self.passed

    def lines(self) -> list:
        out = [dumps({"kind": "header", "tool": "sdspace", "version": __version__,
                      "config": self.config})]
        for e in sorted(self.entries, key=ReportEntry.sort_key):
            out.append(dumps({"kind": "entry", **e.to_dict()}))
        out.append(dumps({"kind": "summary", "passed": self.passed, "failed": self.failed}))
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"
