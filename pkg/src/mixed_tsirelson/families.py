"""Combinatorics of the cardinality ladder A(k) and the Schreier ladder S(k).

Sets are represented as strictly increasing tuples of positive integers.
``S(0)`` holds the empty set and the singletons, ``S(k+1)`` holds unions
``F_1 < ... < F_d`` of ``S(k)`` sets with ``d <= min F_1``, and ``A(k)`` holds
every set of at most ``k`` elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "FamilyKind",
    "EmptyBlockError",
    "as_finite_set",
    "is_member",
    "is_admissible",
    "compose",
    "family_sup",
    "heaviest_member",
    "greedy_blocks",
    "schreier_rank",
]


class EmptyBlockError(ValueError):
    """Raised when an admissibility test receives an empty block."""


@dataclass(frozen=True, order=True)
class FamilyKind:
    ladder: str
    rank: int

    def __post_init__(self) -> None:
        if self.ladder not in ("A", "S"):
            raise ValueError(f"ladder must be 'A' or 'S', got {self.ladder!r}")
        if not isinstance(self.rank, int) or isinstance(self.rank, bool) or self.rank < 0:
            raise ValueError(f"rank must be a non-negative integer, got {self.rank!r}")

    @classmethod
    def A(cls, rank: int) -> "FamilyKind":
        return cls("A", rank)

    @classmethod
    def S(cls, rank: int) -> "FamilyKind":
        return cls("S", rank)

    def to_json(self) -> dict:
        return {"ladder": self.ladder, "rank": self.rank}

    @classmethod
    def from_json(cls, data: Mapping) -> "FamilyKind":
        return cls(str(data["ladder"]), int(data["rank"]))

    def __str__(self) -> str:
        return f"{self.ladder}({self.rank})"


def as_finite_set(elements: Iterable[int]) -> tuple[int, ...]:
    """Validate and return ``elements`` as a strictly increasing tuple."""
    out = tuple(elements)
    for i, v in enumerate(out):
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeError(f"set elements must be integers, got {v!r}")
        if v < 1:
            raise ValueError(f"set elements must be positive, got {v}")
        if i and out[i - 1] >= v:
            raise ValueError(f"set elements must be strictly increasing: {out}")
    return out


def _schreier_reach(elems: Sequence[int], start: int, rank: int) -> int:
    """End position of the longest initial segment of ``elems[start:]`` in S(rank)."""
    if start >= len(elems):
        return start
    if rank == 0:
        return start + 1
    budget = elems[start]
    pos = start
    while budget > 0 and pos < len(elems):
        pos = _schreier_reach(elems, pos, rank - 1)
        budget -= 1
    return pos


def greedy_blocks(F: Sequence[int], inner: FamilyKind) -> list[tuple[int, ...]]:
    """Split ``F`` into consecutive blocks, each the longest initial segment in ``inner``.

    Because every family on both ladders is hereditary, this greedy split uses
    the fewest blocks and its block minima dominate those of any other split
    into ``inner`` members.
    """
    elems = as_finite_set(F)
    blocks = []
    pos = 0
    while pos < len(elems):
        if inner.ladder == "A":
            if inner.rank == 0:
                raise ValueError("A(0) only contains the empty set; it cannot cover a point")
            end = min(len(elems), pos + inner.rank)
        else:
            end = _schreier_reach(elems, pos, inner.rank)
        blocks.append(tuple(elems[pos:end]))
        pos = end
    return blocks


def is_member(F: Iterable[int], fam: FamilyKind) -> bool:
    """Decide whether ``F`` belongs to ``fam``."""
    elems = as_finite_set(F)
    if fam.ladder == "A":
        return len(elems) <= fam.rank
    return _schreier_reach(elems, 0, fam.rank) == len(elems)


def schreier_rank(F: Iterable[int]) -> int | None:
    """Least ``k`` with ``F`` in S(k), or None when no level contains ``F``.

    Only sets starting at 1 with a second element fall outside every level.
    """
    elems = as_finite_set(F)
    if len(elems) > 1 and elems[0] == 1:
        return None
    k = 0
    while _schreier_reach(elems, 0, k) < len(elems):
        k += 1
    return k


def is_admissible(sets: Sequence[Iterable[int]], fam: FamilyKind) -> bool:
    """Successive non-empty blocks whose minima form a member of ``fam``."""
    blocks = [as_finite_set(E) for E in sets]
    for i, E in enumerate(blocks):
        if not E:
            raise EmptyBlockError(f"block {i} is empty, so its minimum is undefined")
    for left, right in zip(blocks, blocks[1:]):
        if left[-1] >= right[0]:
            return False
    return is_member([E[0] for E in blocks], fam)


def compose(outer: FamilyKind, inner: FamilyKind, F: Iterable[int]) -> bool:
    """Decide ``F in outer[inner]``.

    Among all splits of ``F`` into successive ``inner`` members, the greedy
    split has the fewest blocks and pointwise largest minima, so by the
    spreading and hereditary properties it suffices to test its minima.
    """
    elems = as_finite_set(F)
    if not elems:
        return True
    if inner.ladder == "A" and inner.rank == 0:
        return False
    minima = [block[0] for block in greedy_blocks(elems, inner)]
    return is_member(minima, outer)


def _check_weights(a: Mapping[int, Fraction | int]) -> tuple[list[int], list[Fraction]]:
    items = sorted((int(i), Fraction(v)) for i, v in a.items())
    idx = as_finite_set([i for i, _ in items])
    for i, v in items:
        if v < 0:
            raise ValueError(f"family_sup needs non-negative weights; index {i} has {v}")
    return list(idx), [v for _, v in items]


def _top_sum(values: Sequence[Fraction], count: int) -> tuple[Fraction, list[int]]:
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))[: max(count, 0)]
    return sum((values[i] for i in order), Fraction(0)), sorted(order)


class _FamilySupSolver:
    """Memoised search over unions of successive Schreier blocks.

    Weights are scaled to integers by their common denominator; the search
    keeps only values and argmax choices, and the optimal set is rebuilt once.
    """

    def __init__(self, idx: list[int], w: list[Fraction]) -> None:
        self.idx = idx
        self.den = math.lcm(*(v.denominator for v in w))
        self.w = [v.numerator * (self.den // v.denominator) for v in w]
        self.prefix = [0]
        for v in self.w:
            self.prefix.append(self.prefix[-1] + v)
        self.union_memo: dict[tuple[int, int, int, int], tuple[int, int]] = {}
        self.block_memo: dict[tuple[int, int, int], tuple[int, int]] = {}

    def union(self, rank: int, budget: int, lo: int, hi: int) -> int:
        """Best union of at most ``budget`` successive S(rank) sets inside positions lo..hi."""
        if budget <= 0 or lo > hi:
            return 0
        if budget >= hi - lo + 1:
            return self.prefix[hi + 1] - self.prefix[lo]
        key = (rank, budget, lo, hi)
        hit = self.union_memo.get(key)
        if hit is not None:
            return hit[0]
        if rank == 0:
            best = sum(sorted(self.w[lo : hi + 1], reverse=True)[:budget])
            self.union_memo[key] = (best, lo)
            return best
        best, arg = -1, lo
        for t in range(lo, hi + 1):
            val = self.block(rank, lo, t) + self.union(rank, budget - 1, t + 1, hi)
            if val > best:
                best, arg = val, t
        self.union_memo[key] = (best, arg)
        return best

    def block(self, rank: int, lo: int, hi: int) -> int:
        """Best single S(rank) set inside positions lo..hi."""
        if lo > hi:
            return 0
        if rank == 0:
            return max(self.w[lo : hi + 1])
        key = (rank, lo, hi)
        hit = self.block_memo.get(key)
        if hit is not None:
            return hit[0]
        best, arg = -1, lo
        for j in range(lo, hi + 1):
            val = self.union(rank - 1, self.idx[j], j, hi)
            if val > best:
                best, arg = val, j
        self.block_memo[key] = (best, arg)
        return best

    def union_set(self, rank: int, budget: int, lo: int, hi: int) -> list[int]:
        if budget <= 0 or lo > hi:
            return []
        if budget >= hi - lo + 1:
            return list(range(lo, hi + 1))
        if rank == 0:
            order = sorted(range(lo, hi + 1), key=lambda i: (-self.w[i], i))[:budget]
            return sorted(order)
        self.union(rank, budget, lo, hi)
        t = self.union_memo[(rank, budget, lo, hi)][1]
        return self.block_set(rank, lo, t) + self.union_set(rank, budget - 1, t + 1, hi)

    def block_set(self, rank: int, lo: int, hi: int) -> list[int]:
        if lo > hi:
            return []
        if rank == 0:
            return [max(range(lo, hi + 1), key=lambda i: (self.w[i], -i))]
        self.block(rank, lo, hi)
        j = self.block_memo[(rank, lo, hi)][1]
        return self.union_set(rank - 1, self.idx[j], j, hi)

    def solve(self, rank: int) -> tuple[Fraction, tuple[int, ...]]:
        last = len(self.w) - 1
        value = Fraction(self.block(rank, 0, last), self.den)
        return value, tuple(self.idx[i] for i in self.block_set(rank, 0, last))


def heaviest_member(a: Mapping[int, Fraction | int], fam: FamilyKind) -> tuple[Fraction, tuple[int, ...]]:
    """Largest total weight of a member of ``fam`` and one set attaining it."""
    idx, w = _check_weights(a)
    if not idx:
        return Fraction(0), ()
    if fam.ladder == "A":
        val, picked = _top_sum(w, fam.rank)
        return val, tuple(idx[i] for i in picked)
    if fam.rank == 0:
        j = max(range(len(w)), key=lambda i: (w[i], -i))
        return w[j], (idx[j],)
    if fam.rank == 1:
        # a member with minimum at least idx[j] may hold idx[j] points from position j on
        best: tuple[Fraction, tuple[int, ...]] = (Fraction(-1), ())
        for j in range(len(w)):
            val, picked = _top_sum(w[j:], idx[j])
            if val > best[0]:
                best = (val, tuple(idx[j + i] for i in picked))
        return best
    return _FamilySupSolver(idx, w).solve(fam.rank)


def family_sup(a: Mapping[int, Fraction | int], fam: FamilyKind) -> Fraction:
    """``sup over G in fam`` of the weight carried by ``G``; weights must be non-negative."""
    return heaviest_member(a, fam)[0]
