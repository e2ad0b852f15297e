"""Basic special averages: construction, verification and their norm estimates."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .bounds import decide_le, norm_interval, settle, weighted_interval
from .families import FamilyKind, family_sup, is_member
from .norm import norm, weighted_norm
from .reports import Report
from .space import SpaceSpec
from .trees import Leaf, Node, validate
from .vectors import FiniteVector, format_rational, parse_rational

__all__ = [
    "SpecialAverage",
    "ConstructionError",
    "make_basic_average",
    "check_scc",
    "check_lemma36",
    "check_lemma37",
    "estimate_w",
    "w_evidence",
    "MAX_SUPPORT",
]

MAX_SUPPORT = 4096


class ConstructionError(RuntimeError):
    """A verified construction did not succeed within its budget."""


@dataclass(frozen=True)
class SpecialAverage:
    """A convex combination claimed to be an ``(rank, epsilon)`` basic special average."""

    vector: FiniteVector
    rank: int
    epsilon: Fraction
    ladder: str = "S"

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", parse_rational(self.epsilon))
        if self.ladder not in ("A", "S"):
            raise ValueError(f"ladder must be 'A' or 'S', got {self.ladder!r}")
        if self.rank < 0:
            raise ValueError("rank must be non-negative")

    @property
    def support(self) -> tuple[int, ...]:
        return self.vector.support

    def to_json(self) -> dict:
        out = self.vector.to_json()
        out.update({"rank": self.rank, "epsilon": format_rational(self.epsilon), "ladder": self.ladder})
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "SpecialAverage":
        return cls(
            FiniteVector.from_json(data),
            int(data["rank"]),
            parse_rational(data["epsilon"]),
            str(data.get("ladder", "S")),
        )


# -- construction -------------------------------------------------------------


def _full_end(rank: int, start: int, limit: int) -> int:
    """First index after the maximal repeated average of ``rank`` starting at ``start``."""
    if rank == 0:
        return start + 1
    pos = start
    for _ in range(start):
        pos = _full_end(rank - 1, pos, limit)
        if pos - start > limit:
            raise ConstructionError(f"a rank-{rank} repeated average from {start} exceeds {limit} points")
    return pos


def _full_average(rank: int, start: int) -> tuple[dict[int, Fraction], int]:
    """Uniform average of ``start`` successive maximal averages of rank ``rank - 1``."""
    if rank == 0:
        return {start: Fraction(1)}, start + 1
    return _uniform_of_pieces(rank, start, start)


def _uniform_of_pieces(rank: int, start: int, count: int) -> tuple[dict[int, Fraction], int]:
    coords: dict[int, Fraction] = {}
    pos = start
    w = Fraction(1, count)
    for _ in range(count):
        piece, pos = _full_average(rank - 1, pos)
        for i, v in piece.items():
            coords[i] = v * w
    return coords, pos


def _pieces_end(rank: int, start: int, count: int, limit: int) -> int:
    pos = start
    for _ in range(count):
        pos = _full_end(rank - 1, pos, limit)
        if pos - start > limit:
            raise ConstructionError(f"{count} rank-{rank - 1} pieces from {start} exceed {limit} points")
    return pos


def make_basic_average(
    n: int,
    eps: object,
    min_start: int = 1,
    ladder: str = "S",
    max_retries: int = 64,
    max_support: int = MAX_SUPPORT,
) -> SpecialAverage:
    """Construct an ``(n, eps)`` basic special average supported after ``min_start``.

    On the A ladder this is ``1/n`` on ``n`` consecutive indices. On the S
    ladder a rank-``n`` average is the uniform average of ``d`` successive
    maximal rank-``(n-1)`` repeated averages, with ``d`` the least count that
    passes ``check_scc``; when no count up to the first index works, the
    start moves right. The result is always re-verified.
    """
    eps = parse_rational(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if min_start < 1:
        raise ValueError("min_start must be at least 1")
    if n < 0:
        raise ValueError("rank must be non-negative")
    if ladder == "A":
        if n == 0:
            raise ValueError("the A ladder has no rank-0 averages")
        if Fraction(1, n) >= eps:
            raise ValueError(f"1/{n} >= {eps}: no uniform average of rank {n} meets this epsilon")
        start = max(min_start, int(1 / eps) + 1)
        vec = FiniteVector(tuple((start + i, Fraction(1, n)) for i in range(n)))
        avg = SpecialAverage(vec, n, eps, "A")
        if not check_scc(avg):
            raise ConstructionError("uniform average failed verification")
        return avg
    if ladder != "S":
        raise ValueError(f"ladder must be 'A' or 'S', got {ladder!r}")
    if n == 0:
        return SpecialAverage(FiniteVector.unit(min_start), 0, eps, "S")
    start = min_start
    lowest = int(1 / eps) + 1
    for _ in range(max_retries):
        for d in range(lowest, start + 1):
            try:
                _pieces_end(n, start, d, max_support)
            except ConstructionError:
                break
            coords, _ = _uniform_of_pieces(n, start, d)
            avg = SpecialAverage(FiniteVector.from_mapping(coords), n, eps, "S")
            if check_scc(avg):
                return avg
        start += 1
    raise ConstructionError(
        f"no ({n}, {eps}) average found from start {min_start} within {max_retries} retries"
    )


# -- verification -------------------------------------------------------------


def check_scc(x: SpecialAverage) -> bool:
    """Whether ``x`` is an ``(rank, epsilon)`` basic special average."""
    vec = x.vector
    values = vec.values()
    if not values or any(v < 0 for v in values) or vec.total() != 1:
        return False
    if x.ladder == "A":
        return (
            x.rank >= 1
            and len(values) == x.rank
            and all(v == Fraction(1, x.rank) for v in values)
            and Fraction(1, x.rank) < x.epsilon
        )
    if not is_member(vec.support, FamilyKind("S", x.rank)):
        return False
    if x.rank == 0:
        return True
    return family_sup(vec.as_dict(), FamilyKind("S", x.rank - 1)) < x.epsilon


def _ladder_matches(x: SpecialAverage, space: SpaceSpec) -> None:
    if x.ladder != space.ladder:
        raise ValueError(f"average built for ladder {x.ladder} used in a space on ladder {space.ladder}")


def check_lemma36(x: SpecialAverage, space: SpaceSpec | None = None) -> Report:
    """``theta_n <= ||x|| <= theta_n + epsilon`` for a verified average."""
    space = space or SpaceSpec(x.ladder)
    _ladder_matches(x, space)
    rep = Report(f"lemma36: theta_{x.rank} <= ||x|| <= theta_{x.rank} + {format_rational(x.epsilon)}")
    rep.premise("special-average", check_scc(x))
    vec = x.vector
    if x.rank == 0:
        value = norm(vec, space)
        rep.add(value == vec.sup(), bound="sup-norm", norm=value)
        return rep
    n = x.rank
    witness = Node(n, tuple(Leaf(1, i) for i in vec.support))
    tree_ok = bool(validate(witness, space))
    if space.theta.is_exact:
        value = norm(vec, space)
        theta = space.weight(n)
        rep.add(theta <= value, bound="lower", norm=value, theta=theta, margin=value - theta)
        rep.add(value <= theta + x.epsilon, bound="upper", norm=value, theta=theta, margin=theta + x.epsilon - value)
        return rep
    # the uniform functional of weight theta_n attains theta_n on x whatever the exact weight is
    rep.add(tree_ok and vec.total() == 1, bound="lower", certificate="root functional over the support")

    def upper(sp: SpaceSpec) -> bool | None:
        lo, hi = sp.theta.enclosure(n)
        return decide_le(norm_interval(vec, sp), (lo + x.epsilon, hi + x.epsilon))

    nlo, nhi = norm_interval(vec, space)
    rep.add(settle(upper, space), bound="upper", norm_lower=nlo, norm_upper=nhi, theta=space.theta.enclosure(n))
    return rep


def check_lemma37(x: SpecialAverage, k: int, eps: object, space: SpaceSpec | None = None) -> Report:
    """``weighted_norm(x / theta_n, j) <= (1 + eps) theta_j`` for every ``j <= k``."""
    space = space or SpaceSpec(x.ladder)
    _ladder_matches(x, space)
    eps = parse_rational(eps)
    rep = Report(f"lemma37: |f(x/theta_{x.rank})| <= (1+{format_rational(eps)}) w(f) for w(f) >= theta_{k}")
    rep.premise("special-average", check_scc(x))
    vec = x.vector
    for j in range(1, k + 1):

        def one(sp: SpaceSpec, j: int = j) -> bool | None:
            wlo, whi = weighted_interval(vec, j, sp)
            if x.rank == 0:
                slo = shi = Fraction(1)
            else:
                tlo, thi = sp.theta.enclosure(x.rank)
                slo, shi = 1 / thi, 1 / tlo
            tjlo, tjhi = sp.theta.enclosure(j)
            return decide_le((wlo * slo, whi * shi), ((1 + eps) * tjlo, (1 + eps) * tjhi))

        scale = Fraction(1) if x.rank == 0 else 1 / space.weight(x.rank)
        lhs = scale * weighted_norm(vec, j, space)
        rep.add(settle(one, space), j=j, lhs=lhs, rhs=(1 + eps) * space.weight(j))
    return rep


def w_evidence(
    eps: object,
    k: int,
    space: SpaceSpec | None = None,
    max_rank: int | None = None,
    starts: Iterable[int] = (3, 5, 10),
    average_eps: object | None = None,
) -> Report:
    """Per-rank outcome of ``check_lemma37`` on constructed probe averages.

    A rank is "refuted" when some probe fails, "passed" when all pass, and
    "unsampled" when no probe fits the construction budget. Probes are
    ``(n, average_eps)`` averages, by default with ``average_eps = eps``.
    """
    space = space or SpaceSpec()
    eps = parse_rational(eps)
    avg_eps = eps if average_eps is None else parse_rational(average_eps)
    if eps <= 0 or avg_eps <= 0:
        raise ValueError("epsilon must be positive")
    if max_rank is None:
        max_rank = 4 if space.ladder == "S" else 64
    rep = Report(f"weight threshold evidence for eps={format_rational(eps)}, k={k}")
    first = 1 if space.ladder == "S" else int(1 / avg_eps) + 1
    for n in range(first, max_rank + 1):
        try:
            avgs = [make_basic_average(n, avg_eps, s, space.ladder) for s in starts]
        except ConstructionError as exc:
            rep.witnesses.append({"rank": n, "status": "unsampled", "reason": str(exc)})
            continue
        ok = all(check_lemma37(a, k, eps, space) for a in avgs)
        rep.witnesses.append({"rank": n, "status": "passed" if ok else "refuted"})
    return rep


def estimate_w(
    eps: object,
    k: int,
    space: SpaceSpec | None = None,
    max_rank: int | None = None,
    starts: Iterable[int] = (3, 5, 10),
    average_eps: object | None = None,
) -> int:
    """Least rank not refuted by any constructed probe average of that rank or above.

    Ranks whose probes exceed the construction budget carry no evidence, so
    the answer may sit just above the last refuted rank. Only constructed
    averages are sampled: the value is a usable parameter, not a proof.
    """
    rep = w_evidence(eps, k, space, max_rank, starts, average_eps)
    ranks = [w["rank"] for w in rep.witnesses]
    refuted = [w["rank"] for w in rep.witnesses if w["status"] == "refuted"]
    passed = [w["rank"] for w in rep.witnesses if w["status"] == "passed"]
    if not passed and not refuted:
        raise ConstructionError("no probe average could be constructed within the budget")
    candidate = max(refuted) + 1 if refuted else min(ranks)
    if candidate > max(ranks):
        raise ConstructionError(f"every sampled rank up to {max(ranks)} is refuted for eps={eps}, k={k}")
    return candidate
