"""Weight sequences ``n -> theta_n`` with exact rational values or rational enclosures."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

from mpmath import iv, libmp

__all__ = [
    "ThetaSequence",
    "ReciprocalShift",
    "Geometric",
    "LogEnclosure",
    "Table",
    "theta_from_json",
    "certify_le",
    "Undecided",
]


class Undecided(ArithmeticError):
    """An enclosure comparison stayed ambiguous at the largest allowed precision."""


class ThetaSequence(ABC):
    """A weight sequence indexed from 1.

    ``at(n)`` is the exact rational value used by every computation. Kinds
    whose ideal value is irrational expose it only through ``enclosure(n)``
    and through ``sides()``, which returns rational sequences bounding it
    from below and above.
    """

    kind: str = ""

    @abstractmethod
    def at(self, n: int) -> Fraction: ...

    def enclosure(self, n: int) -> tuple[Fraction, Fraction]:
        v = self.at(n)
        return v, v

    @property
    def is_exact(self) -> bool:
        return True

    def sides(self) -> tuple["ThetaSequence", "ThetaSequence"]:
        return self, self

    def refined(self) -> "ThetaSequence":
        return self

    @abstractmethod
    def to_json(self) -> dict: ...

    def values(self, upto: int) -> list[Fraction]:
        """``[theta_1, ..., theta_upto]``."""
        return [self.at(n) for n in range(1, upto + 1)]

    def regularity_violations(self, ladder: str, bound: int) -> list[tuple[int, int]]:
        """Pairs ``(n, m)`` up to ``bound`` breaking the ladder's submultiplicativity rule."""
        bad = []
        for n in range(1, bound + 1):
            for m in range(n, bound + 1):
                target = n + m if ladder == "S" else n * m
                lhs = lambda seq, n=n, m=m: seq.enclosure(n)[1] * seq.enclosure(m)[1]
                rhs = lambda seq, t=target: seq.enclosure(t)[0]
                if self.is_exact:
                    if self.at(n) * self.at(m) > self.at(target):
                        bad.append((n, m))
                elif n == 1 and self.enclosure(1) == (1, 1):
                    continue
                elif not certify_le(self, lhs, rhs):
                    bad.append((n, m))
        return bad

    def decreasing_violations(self, bound: int) -> list[int]:
        """Indices ``n < bound`` with ``theta_{n+1} >= theta_n`` (certified on enclosures)."""
        bad = []
        for n in range(1, bound):
            if not certify_le(
                self,
                lambda seq, n=n: seq.enclosure(n + 1)[1],
                lambda seq, n=n: seq.enclosure(n)[0],
                strict=True,
            ):
                bad.append(n)
        return bad

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ThetaSequence) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash(repr(sorted(self.to_json().items())))


def certify_le(
    seq: ThetaSequence,
    lhs: Callable[[ThetaSequence], Fraction],
    rhs: Callable[[ThetaSequence], Fraction],
    *,
    strict: bool = False,
    max_refinements: int = 4,
) -> bool:
    """Decide ``lhs <= rhs`` where both sides are monotone bounds built from enclosures.

    ``lhs`` must return an upper bound and ``rhs`` a lower bound of the
    quantities being compared; when the bounds do not separate, precision is
    doubled. Returns False only when the reverse inequality is certified via
    the opposite bounds, and raises ``Undecided`` otherwise.
    """
    cur = seq
    for _ in range(max_refinements + 1):
        hi, lo = lhs(cur), rhs(cur)
        if hi < lo or (not strict and hi == lo):
            return True
        if cur.is_exact:
            return False
        flipped_lo = lhs(_Flipped(cur))
        flipped_hi = rhs(_Flipped(cur))
        if flipped_lo > flipped_hi or (strict and flipped_lo == flipped_hi):
            return False
        cur = cur.refined()
    raise Undecided("enclosure comparison undecided after precision widening")


class _Flipped(ThetaSequence):
    """View of an enclosure with its bounds swapped, for certifying the reverse inequality."""

    def __init__(self, base: ThetaSequence) -> None:
        self.base = base
        self.kind = base.kind

    def at(self, n: int) -> Fraction:
        return self.base.at(n)

    def enclosure(self, n: int) -> tuple[Fraction, Fraction]:
        lo, hi = self.base.enclosure(n)
        return hi, lo

    @property
    def is_exact(self) -> bool:
        return self.base.is_exact

    def to_json(self) -> dict:
        return self.base.to_json()


@dataclass(frozen=True, eq=False)
class ReciprocalShift(ThetaSequence):
    """``theta_n = 1/(n + shift)``."""

    shift: int = 1
    kind = "reciprocal-shift"

    def __post_init__(self) -> None:
        if self.shift < 1:
            raise ValueError("shift must be at least 1 so that every weight lies in (0, 1)")

    def at(self, n: int) -> Fraction:
        _check_index(n)
        return Fraction(1, n + self.shift)

    def to_json(self) -> dict:
        return {"kind": self.kind, "shift": self.shift}


@dataclass(frozen=True, eq=False)
class Geometric(ThetaSequence):
    """``theta_n = ratio ** n``."""

    ratio: Fraction = Fraction(1, 2)
    kind = "geometric"

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if not 0 < self.ratio < 1:
            raise ValueError("geometric ratio must lie in (0, 1)")

    def at(self, n: int) -> Fraction:
        _check_index(n)
        return self.ratio**n

    def to_json(self) -> dict:
        return {"kind": self.kind, "ratio": _q(self.ratio)}


@lru_cache(maxsize=None)
def _log_weight_bounds(n: int, bits: int) -> tuple[Fraction, Fraction]:
    """Dyadic bounds with denominator ``2**bits`` around ``1/log2(n+1)``."""
    m = n + 1
    if m & (m - 1) == 0:
        exact = Fraction(1, m.bit_length() - 1)
        scaled = exact * 2**bits
        lo = Fraction(scaled.numerator // scaled.denominator, 2**bits)
        hi = lo if lo == exact else lo + Fraction(1, 2**bits)
        return lo, hi
    prev = iv.prec
    try:
        iv.prec = bits + 32
        r = iv.log(2) / iv.log(m)
        a, b = (Fraction(*libmp.to_rational(end)) for end in r._mpi_)
    finally:
        iv.prec = prev
    scale = 2**bits
    lo = Fraction((a * scale).numerator // (a * scale).denominator, scale)
    hi_num = -((-(b * scale).numerator) // (b * scale).denominator)
    return lo, Fraction(hi_num, scale)


@dataclass(frozen=True, eq=False)
class LogEnclosure(ThetaSequence):
    """Dyadic enclosures of ``1/log2(n+1)``; ``at`` returns the ``side`` bound."""

    side: str = "lower"
    bits: int = 64
    kind = "log-enclosure"

    def __post_init__(self) -> None:
        if self.side not in ("lower", "upper"):
            raise ValueError("side must be 'lower' or 'upper'")
        if self.bits < 8:
            raise ValueError("at least 8 bits of precision are required")

    def at(self, n: int) -> Fraction:
        _check_index(n)
        lo, hi = _log_weight_bounds(n, self.bits)
        return lo if self.side == "lower" else hi

    def enclosure(self, n: int) -> tuple[Fraction, Fraction]:
        _check_index(n)
        return _log_weight_bounds(n, self.bits)

    @property
    def is_exact(self) -> bool:
        return False

    def sides(self) -> tuple["LogEnclosure", "LogEnclosure"]:
        return LogEnclosure("lower", self.bits), LogEnclosure("upper", self.bits)

    def refined(self) -> "LogEnclosure":
        return LogEnclosure(self.side, self.bits * 2)

    def to_json(self) -> dict:
        return {"kind": self.kind, "side": self.side, "bits": self.bits}


@dataclass(frozen=True, eq=False)
class Table(ThetaSequence):
    """Explicit values ``theta_1..theta_T`` continued by a tail rule.

    ``tail="geometric"`` continues with ``theta_T * tail_ratio**(n-T)``;
    ``tail="harmonic"`` continues with ``theta_T * (T+1)/(n+1)``.
    """

    table: tuple[Fraction, ...] = field(default_factory=tuple)
    tail: str = "harmonic"
    tail_ratio: Fraction = Fraction(1, 2)
    kind = "table"

    def __post_init__(self) -> None:
        vals = tuple(Fraction(v) for v in self.table)
        object.__setattr__(self, "table", vals)
        object.__setattr__(self, "tail_ratio", Fraction(self.tail_ratio))
        if not vals:
            raise ValueError("table needs at least one value")
        if any(not 0 < v < 1 for v in vals):
            raise ValueError("table values must lie in (0, 1)")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ValueError("table values must be strictly decreasing")
        if self.tail not in ("geometric", "harmonic"):
            raise ValueError("tail must be 'geometric' or 'harmonic'")
        if self.tail == "geometric" and not 0 < self.tail_ratio < 1:
            raise ValueError("geometric tail ratio must lie in (0, 1)")

    def at(self, n: int) -> Fraction:
        _check_index(n)
        T = len(self.table)
        if n <= T:
            return self.table[n - 1]
        last = self.table[-1]
        if self.tail == "geometric":
            return last * self.tail_ratio ** (n - T)
        return last * Fraction(T + 1, n + 1)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "table": [_q(v) for v in self.table], "tail": self.tail}
        if self.tail == "geometric":
            out["tail_ratio"] = _q(self.tail_ratio)
        return out


def _check_index(n: int) -> None:
    if n < 1:
        raise ValueError(f"weights are indexed from 1, got {n}")


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def theta_from_json(data: Mapping) -> ThetaSequence:
    kind = data.get("kind")
    if kind == "reciprocal-shift":
        return ReciprocalShift(int(data.get("shift", 1)))
    if kind == "geometric":
        return Geometric(Fraction(data["ratio"]))
    if kind == "log-enclosure":
        return LogEnclosure(str(data.get("side", "lower")), int(data.get("bits", 64)))
    if kind == "table":
        return Table(
            tuple(Fraction(v) for v in data["table"]),
            str(data.get("tail", "harmonic")),
            Fraction(data.get("tail_ratio", "1/2")),
        )
    raise ValueError(f"unknown theta kind {kind!r}")
