"""Structured verdict lists shared by analyses, scenarios and the CLI."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from . import __version__

VERDICTS = ("pass", "fail", "info")

Witness = Union[str, float, int, None]


def _clean(value):
    if isinstance(value, complex):
        if value.imag == 0:
            return float(value.real)
        return f"{value.real!r}{value.imag:+}j"
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


@dataclass
class Check:
    name: str
    verdict: str
    witness: Witness = None
    tolerance: Optional[float] = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        self.witness = _clean(self.witness)

    @classmethod
    def expect(cls, name: str, ok: bool, witness: Witness = None, tolerance=None) -> "Check":
        return cls(name, "pass" if ok else "fail", witness, tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict,
                "witness": self.witness, "tolerance": self.tolerance}


@dataclass
class Report:
    id: str
    checks: list = field(default_factory=list)
    timing: float = 0.0
    version: str = __version__

    @property
    def ok(self) -> bool:
        return all(c.verdict != "fail" for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, checks) -> None:
        self.checks.extend(checks)

    def to_dict(self) -> dict:
        return {
            "artifact_version": self.version,
            "id": self.id,
            "ok": self.ok,
            "checks": [c.to_dict() for c in self.checks],
            "timing_s": round(self.timing, 6),
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)

    def to_text(self, color: bool = False) -> str:
        colors = {"pass": "\x1b[32m", "fail": "\x1b[31m", "info": "\x1b[36m"}
        lines = [f"== {self.id} =="]
        for c in self.checks:
            tag = c.verdict.upper()
            if color:
                tag = f"{colors[c.verdict]}{tag}\x1b[0m"
            line = f"[{tag}] {c.name}"
            if c.witness is not None:
                line += f": {c.witness}"
            if c.tolerance is not None:
                line += f" (tol {c.tolerance:g})"
            lines.append(line)
        lines.append(f"result: {'ok' if self.ok else 'FAILED'}")
        return "\n".join(lines)
