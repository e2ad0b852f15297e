"""Exact norms in ``T[(F_n, theta_n)]`` and certificates for them."""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ._interval_dp import IntervalNormSolver
from .families import FamilyKind, family_sup, schreier_rank
from .space import SpaceSpec
from .trees import Leaf, NormingTree, blocks_are_successive, evaluate, support_of, validate
from .vectors import FiniteVector

__all__ = [
    "norm",
    "weighted_norm",
    "norm_bounds",
    "guarded_norm",
    "GuardedNorm",
    "optimizer_tree",
    "weighted_optimizer_tree",
    "brute_force_norm",
    "coordinate_functional_bound",
    "g_norm",
    "clear_cache",
    "BRUTE_FORCE_LIMIT",
]

BRUTE_FORCE_LIMIT = 10
_CACHE_SIZE = 256


class _SolverCache:
    """Small LRU of interval solvers keyed by ``(|x|, ladder, theta)``."""

    def __init__(self, size: int) -> None:
        self.size = size
        self.items: OrderedDict = OrderedDict()
        self.lock = threading.Lock()

    def get(self, x: FiniteVector, space: SpaceSpec) -> IntervalNormSolver:
        key = (x.abs().coords, space.ladder, space.theta)
        with self.lock:
            hit = self.items.get(key)
            if hit is not None:
                self.items.move_to_end(key)
                return hit
        solver = IntervalNormSolver(
            [i for i, _ in x.coords], [abs(v) for _, v in x.coords], space.ladder, space.theta
        )
        with self.lock:
            self.items[key] = solver
            while len(self.items) > self.size:
                self.items.popitem(last=False)
        return solver


_solvers = _SolverCache(_CACHE_SIZE)


def clear_cache() -> None:
    with _solvers.lock:
        _solvers.items.clear()


def _content_and_scale(x: FiniteVector) -> tuple[FiniteVector, Fraction]:
    """Split ``x = scale * y`` with ``max |y_i| = 1`` so that multiples share a cache entry."""
    top = x.sup()
    return x.scale(1 / top), top


def norm(x: FiniteVector, space: SpaceSpec | None = None) -> Fraction:
    """``||x||`` exactly; the zero vector has norm 0."""
    space = space or SpaceSpec()
    if not x:
        return Fraction(0)
    y, top = _content_and_scale(x)
    return top * _solvers.get(y, space).norm


def weighted_norm(x: FiniteVector, j: int, space: SpaceSpec | None = None) -> Fraction:
    """``sup f(x)`` over norming functionals whose root operation has weight ``theta_j``."""
    space = space or SpaceSpec()
    if j < 1:
        raise ValueError("weight index must be at least 1")
    if not x:
        return Fraction(0)
    y, top = _content_and_scale(x)
    return top * _solvers.get(y, space).weighted_norm(j)


def norm_bounds(x: FiniteVector, space: SpaceSpec | None = None) -> tuple[Fraction, Fraction]:
    """Rational bounds on ``||x||`` when the weights are only known through enclosures.

    The norm is monotone in every weight, so the lower and upper weight
    sequences bracket it; for exact weights both entries coincide.
    """
    space = space or SpaceSpec()
    lo, hi = space.sides()
    return norm(x, lo), norm(x, hi)


@dataclass(frozen=True)
class GuardedNorm:
    """A norm value with the smallest weight cutoff whose guard accepts it."""

    value: Fraction
    cutoff: int
    raised: bool


def guarded_norm(x: FiniteVector, space: SpaceSpec | None = None) -> GuardedNorm:
    """Norm together with the cutoff check ``theta_{J+1} * l1(x) <= value``.

    The solver already searches every weight that can matter, so the value
    never depends on the cutoff; this reports how far ``J`` had to move.
    """
    space = space or SpaceSpec()
    value = norm(x, space)
    mass = x.l1()
    J = space.weight_cutoff
    while space.weight(J + 1) * mass > value:
        J += 1
    return GuardedNorm(value, J, J != space.weight_cutoff)


def _signs(x: FiniteVector) -> list[int]:
    return [1 if v > 0 else -1 for _, v in x.coords]


def optimizer_tree(x: FiniteVector, space: SpaceSpec | None = None) -> NormingTree:
    """A valid norming tree ``f`` with ``f(x) = ||x||``."""
    space = space or SpaceSpec()
    if not x:
        raise ValueError("the zero vector has no norming functional")
    y, _ = _content_and_scale(x)
    return _solvers.get(y, space).interval_tree(0, len(x) - 1, _signs(x))


def weighted_optimizer_tree(x: FiniteVector, j: int, space: SpaceSpec | None = None) -> NormingTree:
    """A valid tree with root weight ``theta_j`` attaining ``weighted_norm(x, j)``."""
    space = space or SpaceSpec()
    if not x:
        raise ValueError("the zero vector has no norming functional")
    y, _ = _content_and_scale(x)
    return _solvers.get(y, space).weighted_tree(j, _signs(x))


# -- independent oracle -------------------------------------------------------


def _successive_sequences(elems: tuple[int, ...]):
    """All sequences of successive non-empty subsets of ``elems`` (as position tuples)."""
    n = len(elems)

    def rec(i: int, done: tuple, current: tuple):
        if i == n:
            blocks = done + ((current,) if current else ())
            if blocks:
                yield blocks
            return
        yield from rec(i + 1, done, current)
        if current:
            yield from rec(i + 1, done, current + (elems[i],))
        yield from rec(i + 1, done + ((current,) if current else ()), (elems[i],))

    yield from rec(0, (), ())


def brute_force_norm(x: FiniteVector, space: SpaceSpec | None = None) -> Fraction:
    """Exhaustive norm over every sequence of successive subsets of the support.

    Slow by design: nothing is assumed about intervals, start points or
    dominated weights beyond the cutoff guard. Supports larger than
    ``BRUTE_FORCE_LIMIT`` are refused.
    """
    space = space or SpaceSpec()
    if len(x) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_LIMIT} support points")
    if not x:
        return Fraction(0)
    idx = [i for i, _ in x.coords]
    mag = [abs(v) for _, v in x.coords]
    memo: dict[tuple[int, ...], Fraction] = {}

    def rank(minima: list[int]) -> int:
        return len(minima) if space.ladder == "A" else schreier_rank(minima)

    def solve(elems: tuple[int, ...]) -> Fraction:
        hit = memo.get(elems)
        if hit is not None:
            return hit
        best = max(mag[p] for p in elems)
        by_rank: dict[int, Fraction] = {}
        for blocks in _successive_sequences(elems):
            if len(blocks) == 1 and blocks[0] == elems:
                continue
            r = rank([idx[b[0]] for b in blocks])
            if r is None:
                continue
            r = max(r, 1)
            total = sum((solve(b) for b in blocks), Fraction(0))
            if total > by_rank.get(r, Fraction(-1)):
                by_rank[r] = total
        mass = sum((mag[p] for p in elems), Fraction(0))
        top = max(by_rank, default=0)
        n, running = 1, Fraction(0)
        while n <= top or space.weight(n) * mass > best:
            running = max(running, by_rank.get(n, Fraction(0)))
            best = max(best, space.weight(n) * running)
            if n > top and running == mass:
                break
            n += 1
        memo[elems] = best
        return best

    return solve(tuple(range(len(idx))))


# -- derived quantities -------------------------------------------------------


def coordinate_functional_bound(
    fs: Sequence[NormingTree], x: FiniteVector, space: SpaceSpec | None = None
) -> Fraction:
    """``||sum_i f_i(x) e_i||`` for a block sequence of norming trees, checked against ``||x||``."""
    space = space or SpaceSpec()
    if not blocks_are_successive(fs):
        raise ValueError("functionals must form a block sequence")
    for k, f in enumerate(fs):
        report = validate(f, space)
        if not report:
            raise ValueError(f"functional {k} is not a valid norming tree: {report.reason}")
    y = FiniteVector.from_pairs((i + 1, evaluate(f, x, space)) for i, f in enumerate(fs))
    value = norm(y, space)
    if value > norm(x, space):
        raise AssertionError("coordinate functional bound exceeded the norm")
    return value


def g_norm(
    x: FiniteVector, G: Sequence[NormingTree], fam: FamilyKind, space: SpaceSpec | None = None
) -> Fraction:
    """``sup over F in fam`` of ``sum_{n in F} |G_n(x)|``, positions read as ``minsupp(G_n)``."""
    space = space or SpaceSpec()
    if not x:
        return Fraction(0)
    weights: dict[int, Fraction] = {}
    for g in G:
        supp = support_of(g)
        if not supp:
            continue
        if supp[0] in weights:
            raise ValueError(f"two functionals share the minimum support {supp[0]}")
        weights[supp[0]] = abs(evaluate(g, x, space))
    return family_sup(weights, fam)


def unit_functional(index: int, sign: int = 1) -> NormingTree:
    return Leaf(sign, index)
