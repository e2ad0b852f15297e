"""Deciding inequalities between quantities known only through rational enclosures."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

from .space import SpaceSpec

__all__ = ["Interval", "decide_le", "settle", "norm_interval", "weighted_interval", "theta_interval"]

Interval = tuple[Fraction, Fraction]


def decide_le(lhs: Interval, rhs: Interval, strict: bool = False) -> bool | None:
    """``lhs <= rhs`` (``<`` when strict) if the enclosures settle it, else None."""
    if lhs[1] < rhs[0] or (not strict and lhs[1] == rhs[0]):
        return True
    if lhs[0] > rhs[1] or (strict and lhs[0] == rhs[1]):
        return False
    return None


def settle(check: Callable[[SpaceSpec], bool | None], space: SpaceSpec, attempts: int = 2) -> bool | None:
    """Run ``check`` and widen the weight precision while it stays undecided."""
    cur = space
    for _ in range(attempts + 1):
        outcome = check(cur)
        if outcome is not None or cur.theta.is_exact:
            return outcome
        cur = cur.with_theta(cur.theta.refined())
    return None


def theta_interval(space: SpaceSpec, n: int) -> Interval:
    return space.theta.enclosure(n)


def norm_interval(x, space: SpaceSpec) -> Interval:
    """Enclosure of ``||x||`` from the lower and upper weight sequences."""
    from .norm import norm_bounds

    return norm_bounds(x, space)


def weighted_interval(x, j: int, space: SpaceSpec) -> Interval:
    from .norm import weighted_norm

    lo, hi = space.sides()
    return weighted_norm(x, j, lo), weighted_norm(x, j, hi)
