"""Finitely supported vectors with exact rational coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

__all__ = ["FiniteVector", "parse_rational", "format_rational"]


def parse_rational(value: object) -> Fraction:
    """Read ``"p/q"``, ``"p"``, an int or a Fraction; floats are refused."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected a rational given as 'p/q', got {value!r}")


def format_rational(value: Fraction) -> str:
    """``"p/q"``, or ``"p"`` for integers."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class FiniteVector:
    """``sum value * e_index`` over ``coords``, kept sorted with zero entries dropped."""

    coords: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self) -> None:
        cleaned = []
        prev = 0
        for index, value in self.coords:
            if isinstance(index, bool) or not isinstance(index, int) or index < 1:
                raise ValueError(f"indices must be positive integers, got {index!r}")
            if index <= prev:
                raise ValueError("indices must be strictly increasing")
            prev = index
            value = parse_rational(value)
            if value:
                cleaned.append((index, value))
        object.__setattr__(self, "coords", tuple(cleaned))

    @classmethod
    def from_mapping(cls, data: Mapping[int, object]) -> "FiniteVector":
        return cls(tuple(sorted((int(i), parse_rational(v)) for i, v in data.items())))

    @classmethod
    def unit(cls, index: int, value: object = 1) -> "FiniteVector":
        return cls(((index, parse_rational(value)),))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, object]]) -> "FiniteVector":
        return cls.from_mapping(dict(pairs))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.coords)

    def __iter__(self) -> Iterator[tuple[int, Fraction]]:
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __bool__(self) -> bool:
        return bool(self.coords)

    def __getitem__(self, index: int) -> Fraction:
        for i, v in self.coords:
            if i == index:
                return v
        return Fraction(0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.coords)

    @property
    def minsupp(self) -> int:
        if not self.coords:
            raise ValueError("the zero vector has no support")
        return self.coords[0][0]

    @property
    def maxsupp(self) -> int:
        if not self.coords:
            raise ValueError("the zero vector has no support")
        return self.coords[-1][0]

    def values(self) -> list[Fraction]:
        return [v for _, v in self.coords]

    def l1(self) -> Fraction:
        return sum((abs(v) for _, v in self.coords), Fraction(0))

    def sup(self) -> Fraction:
        return max((abs(v) for _, v in self.coords), default=Fraction(0))

    def total(self) -> Fraction:
        return sum((v for _, v in self.coords), Fraction(0))

    def abs(self) -> "FiniteVector":
        return FiniteVector(tuple((i, abs(v)) for i, v in self.coords))

    def scale(self, factor: object) -> "FiniteVector":
        f = parse_rational(factor)
        return FiniteVector(tuple((i, v * f) for i, v in self.coords))

    def restrict(self, indices: Iterable[int]) -> "FiniteVector":
        keep = set(indices)
        return FiniteVector(tuple((i, v) for i, v in self.coords if i in keep))

    def restrict_range(self, lo: int, hi: int) -> "FiniteVector":
        return FiniteVector(tuple((i, v) for i, v in self.coords if lo <= i <= hi))

    def __add__(self, other: "FiniteVector") -> "FiniteVector":
        acc = dict(self.coords)
        for i, v in other.coords:
            acc[i] = acc.get(i, Fraction(0)) + v
        return FiniteVector.from_mapping(acc)

    def __neg__(self) -> "FiniteVector":
        return self.scale(-1)

    def __sub__(self, other: "FiniteVector") -> "FiniteVector":
        return self + (-other)

    def __mul__(self, factor: object) -> "FiniteVector":
        return self.scale(factor)

    __rmul__ = __mul__

    def precedes(self, other: "FiniteVector") -> bool:
        """``self < other`` in the block order; zero vectors precede everything."""
        if not self.coords or not other.coords:
            return True
        return self.maxsupp < other.minsupp

    def to_json(self) -> dict:
        return {"coords": [[i, format_rational(v)] for i, v in self.coords]}

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteVector":
        coords = data["coords"]
        pairs = [(int(i), parse_rational(v)) for i, v in coords]
        indices = [i for i, _ in pairs]
        if indices != sorted(set(indices)):
            raise ValueError("vector coordinates must have strictly increasing indices")
        return cls(tuple(pairs))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {format_rational(v)}" for i, v in self.coords)
        return f"FiniteVector({{{body}}})"
