"""The space ``T[(F_n, theta_n)]``: a family ladder together with a weight sequence."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .families import FamilyKind
from .theta import LogEnclosure, ReciprocalShift, ThetaSequence, theta_from_json

__all__ = ["SpaceSpec"]


@dataclass(frozen=True)
class SpaceSpec:
    """Ladder ``"A"`` or ``"S"``, weights, and the weight cutoff ``J``.

    The norm solver never trusts ``weight_cutoff`` blindly: it searches every
    weight up to the point where all start selections are admissible (beyond
    which larger weights are dominated), and reports whether ``J`` would have
    been enough.
    """

    ladder: str = "S"
    theta: ThetaSequence = field(default_factory=ReciprocalShift)
    weight_cutoff: int = 16

    def __post_init__(self) -> None:
        if self.ladder not in ("A", "S"):
            raise ValueError(f"ladder must be 'A' or 'S', got {self.ladder!r}")
        if self.weight_cutoff < 1:
            raise ValueError("weight_cutoff must be positive")

    def family(self, n: int) -> FamilyKind:
        return FamilyKind(self.ladder, n)

    def weight(self, n: int) -> Fraction:
        return self.theta.at(n)

    def with_theta(self, theta: ThetaSequence) -> "SpaceSpec":
        return SpaceSpec(self.ladder, theta, self.weight_cutoff)

    def sides(self) -> tuple["SpaceSpec", "SpaceSpec"]:
        """Spaces built on the lower and upper rational bounds of the weights."""
        lo, hi = self.theta.sides()
        return self.with_theta(lo), self.with_theta(hi)

    def regularity_violations(self, bound: int = 12) -> list[tuple[int, int]]:
        return self.theta.regularity_violations(self.ladder, bound)

    def to_json(self) -> dict:
        return {"ladder": self.ladder, "theta": self.theta.to_json(), "weight_cutoff": self.weight_cutoff}

    @classmethod
    def from_json(cls, data: Mapping) -> "SpaceSpec":
        return cls(
            str(data.get("ladder", "S")),
            theta_from_json(data.get("theta", {"kind": "reciprocal-shift"})),
            int(data.get("weight_cutoff", 16)),
        )

    @classmethod
    def schreier(cls, shift: int = 1) -> "SpaceSpec":
        return cls("S", ReciprocalShift(shift))

    @classmethod
    def schlumprecht(cls, side: str = "lower", bits: int = 64) -> "SpaceSpec":
        return cls("A", LogEnclosure(side, bits))
