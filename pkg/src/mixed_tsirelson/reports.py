"""Structured outcomes of the inequality checkers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .vectors import format_rational

__all__ = ["Premise", "Report", "jsonable"]

PASS = "pass"
FAIL = "fail"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class Premise:
    name: str
    holds: bool
    detail: str = ""
    empirical: bool = False

    def to_json(self) -> dict:
        out = {"name": self.name, "holds": self.holds}
        if self.detail:
            out["detail"] = self.detail
        if self.empirical:
            out["empirical"] = True
        return out


@dataclass
class Report:
    """``claim`` checked on one instance.

    ``verdict`` is ``"pass"``, ``"fail"`` or ``"undecided"`` and refers to the
    conclusions only; premises are reported separately so that a failed
    conclusion under true premises is distinguishable from a relaxed run.
    """

    claim: str
    premises: list[Premise] = field(default_factory=list)
    verdict: str = PASS
    witnesses: list[dict] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.verdict == PASS

    @property
    def premises_hold(self) -> bool:
        return all(p.holds for p in self.premises)

    def add(self, holds: bool | None, **witness: Any) -> bool | None:
        """Record one checked inequality and fold it into the verdict."""
        witness["holds"] = holds
        self.witnesses.append(witness)
        if holds is False:
            self.verdict = FAIL
        elif holds is None and self.verdict == PASS:
            self.verdict = UNDECIDED
        return holds

    def premise(self, name: str, holds: bool, detail: str = "", empirical: bool = False) -> bool:
        self.premises.append(Premise(name, holds, detail, empirical))
        return holds

    def failures(self) -> list[dict]:
        return [w for w in self.witnesses if w.get("holds") is False]

    def to_json(self) -> dict:
        return {
            "claim": self.claim,
            "premises": [p.to_json() for p in self.premises],
            "verdict": self.verdict,
            "witnesses": [jsonable(w) for w in self.witnesses],
        }

    def rows(self) -> list[dict]:
        """Flat rows, one per witness, for tabular output."""
        premise_ok = self.premises_hold
        if not self.witnesses:
            return [{"claim": self.claim, "premises_hold": premise_ok, "verdict": self.verdict}]
        out = []
        for w in self.witnesses:
            row = {"claim": self.claim, "premises_hold": premise_ok, "verdict": self.verdict}
            row.update({k: _scalar(v) for k, v in jsonable(w).items()})
            out.append(row)
        return out


def jsonable(value: Any) -> Any:
    """Rationals become ``"p/q"`` (``"p"`` when integral); containers are converted recursively."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, int):
        return value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_json"):
        return value.to_json()
    return value


def _scalar(value: Any) -> Any:
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value
