"""A non-compact operator ``Tx = sum_n g_n(x) e_{t_n}`` and the estimates behind it."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .families import FamilyKind, is_member
from .norm import g_norm, norm
from .reports import Report
from .ris import CoreTree, RisBundle, build_ris_bundle
from .space import SpaceSpec
from .theta import Geometric, LogEnclosure, ReciprocalShift, Table, ThetaSequence
from .trees import (
    Node,
    NormingTree,
    blocks_are_successive,
    coefficients,
    evaluate,
    support_of,
    tree_from_json,
    tree_to_json,
    validate,
)
from .vectors import FiniteVector, format_rational, parse_rational

__all__ = [
    "RatioError",
    "compute_k_r",
    "compute_k_r_multiplicative",
    "check_fact510",
    "OperatorSpec",
    "build_operator",
    "apply",
    "Prop21Bound",
    "prop21_bound",
    "geometric_tail",
    "check_lemma53",
    "check_lemma54",
    "noncompactness_witness",
    "singularity_probe",
    "estimate_rhs",
]

_SCAN_LIMIT = 1 << 20


class RatioError(ValueError):
    """The weight ratio never stays above the requested constant."""

    def __init__(self, message: str, witness: int) -> None:
        super().__init__(message)
        self.witness = witness


# -- ratio thresholds ---------------------------------------------------------


def _tail_shape(theta: ThetaSequence) -> tuple[int, str]:
    """``(K, shape)``: for ``k >= K`` the ratio is ``"increasing"`` or ``"constant"`` in ``k``."""
    if isinstance(theta, ReciprocalShift):
        return 1, "increasing"
    if isinstance(theta, Geometric):
        return 1, "constant"
    if isinstance(theta, Table):
        return len(theta.table), "constant" if theta.tail == "geometric" else "increasing"
    if isinstance(theta, LogEnclosure):
        return 1, "increasing"
    raise TypeError(f"no monotone-tail argument for theta kind {theta.kind!r}")


def _ratio_above(theta: ThetaSequence, num: int, den: int, c: Fraction) -> bool:
    """Certified ``theta_num / theta_den > c``; undecided enclosures count as failure."""
    nlo, _ = theta.enclosure(num)
    _, dhi = theta.enclosure(den)
    return nlo > c * dhi


def _threshold(theta: ThetaSequence, c: Fraction, index: Callable[[int], int], what: str) -> int:
    c = parse_rational(c)
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    K, shape = _tail_shape(theta)
    k = K
    while not _ratio_above(theta, index(k), k, c):
        if shape == "constant":
            raise RatioError(f"{what} stays at or below {c} from k = {K}", K)
        k += 1
        if k > _SCAN_LIMIT:
            raise RatioError(f"{what} does not exceed {c} below {_SCAN_LIMIT}", k)
    while k > 1 and _ratio_above(theta, index(k - 1), k - 1, c):
        k -= 1
    return k


def compute_k_r(theta: ThetaSequence, c: object, r: int) -> int:
    """Least ``k`` with ``theta_{r+k'} / theta_{k'} > c`` for every ``k' >= k``."""
    if r < 0:
        raise ValueError("r must be non-negative")
    return _threshold(theta, c, lambda k: k + r, f"theta_(k+{r})/theta_k")


def compute_k_r_multiplicative(theta: ThetaSequence, c: object, r: int) -> int:
    """Least ``k`` with ``theta_{r k'} / theta_{k'} > c`` for every ``k' >= k`` (the A-ladder variant)."""
    if r < 1:
        raise ValueError("r must be positive")
    if isinstance(theta, (Geometric, Table)) and r > 1:
        # theta_{rk}/theta_k is eventually decreasing for these kinds
        probe = max(_tail_shape(theta)[0], 1)
        ratio = theta.at(r * probe * 4) / theta.at(probe * 4)
        raise RatioError(f"theta_({r}k)/theta_k decays (ratio {ratio} at k = {probe * 4})", probe * 4)
    return _threshold(theta, c, lambda k: r * k, f"theta_({r}k)/theta_k")


def check_fact510(theta: ThetaSequence, k: int, window: int = 1 << 20) -> Report:
    """Sampled ``theta_{nk}/theta_n`` for ``n = 2^i <= window``; finite evidence only."""
    rep = Report(f"fact510: theta_(n*{k})/theta_n approaches 1")
    rep.premise("finite window", True, f"n <= {window}", empirical=True)
    prev = None
    n = 1
    lows = []
    while n <= window:
        nlo, nhi = theta.enclosure(n * k)
        dlo, dhi = theta.enclosure(n)
        lo, hi = nlo / dhi, nhi / dlo
        lows.append(lo)
        ok = prev is None or hi >= prev
        rep.add(ok, n=n, ratio_lower=lo, ratio_upper=hi)
        prev = lo
        n *= 2
    rep.witnesses.append({"min_ratio_lower": min(lows), "last_ratio_lower": lows[-1]})
    if k > 1 and lows[-1] <= lows[0]:
        rep.add(False, trend="not increasing", first=lows[0], last=lows[-1])
    return rep


# -- the operator -------------------------------------------------------------


@dataclass
class OperatorSpec:
    """``Tx = sum_n g_n(x) e_{t_n}`` with valid block functionals ``g_n`` and increasing targets."""

    functionals: list[NormingTree]
    targets: list[int]
    space: SpaceSpec
    r: list[int] = field(default_factory=list)
    core: CoreTree | None = None
    heights: list[int] = field(default_factory=list)
    c: Fraction = Fraction(1, 2)
    relaxed: bool = False
    bundles: list[RisBundle] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if len(self.functionals) != len(self.targets):
            raise ValueError("one target per functional")
        if any(b <= a for a, b in zip(self.targets, self.targets[1:])):
            raise ValueError("targets must be strictly increasing")
        if any(t < 1 for t in self.targets):
            raise ValueError("targets are positive indices")
        if not blocks_are_successive(self.functionals):
            raise ValueError("functionals must form a block sequence")
        for k, g in enumerate(self.functionals):
            v = validate(g, self.space)
            if not v:
                raise ValueError(f"functional {k} is invalid at {v.path}: {v.reason}")

    def to_json(self) -> dict:
        out = {
            "functionals": [tree_to_json(g) for g in self.functionals],
            "targets": list(self.targets),
            "space": self.space.to_json(),
            "r": list(self.r),
            "heights": list(self.heights),
            "c": format_rational(self.c),
            "relaxed": self.relaxed,
        }
        if self.core is not None:
            out["core"] = self.core.to_json()
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "OperatorSpec":
        return cls(
            [tree_from_json(g) for g in data["functionals"]],
            [int(t) for t in data["targets"]],
            SpaceSpec.from_json(data["space"]),
            [int(v) for v in data.get("r", [])],
            CoreTree.from_json(data["core"]) if "core" in data else None,
            [int(v) for v in data.get("heights", [])],
            parse_rational(data.get("c", "1/2")),
            bool(data.get("relaxed", False)),
        )


def r_conditions(core: CoreTree, r: Sequence[int], space: SpaceSpec, c: object) -> Report:
    """Exact R3 and R4 growth arithmetic for ``r_1, r_2, ...`` against the core enumeration."""
    c = parse_rational(c)
    rep = Report("operator parameter conditions")
    enum = core.enumeration
    ladder = space.ladder
    for j, rj in enumerate(r, start=1):
        if j > len(enum):
            rep.witnesses.append({"condition": "R3", "j": j, "holds": None, "note": "beyond the core truncation"})
            continue
        prior = enum[:j]
        if ladder == "S":
            mass = sum(core.M(mu) + core.m[mu] for mu in prior)
        else:
            mass = sum(core.m[mu] for mu in prior)
        lhs = space.weight(rj) * mass
        rep.add(lhs < Fraction(1, 2**j), condition="R3", j=j, lhs=lhs, rhs=Fraction(1, 2**j))
        if j >= len(enum):
            rep.witnesses.append({"condition": "R4", "j": j, "holds": None, "note": "beyond the core truncation"})
            continue
        mu = enum[j]
        try:
            if ladder == "S":
                k = compute_k_r(space.theta, c, rj + core.ord(mu))
            else:
                k = compute_k_r_multiplicative(space.theta, c, rj)
        except RatioError as exc:
            rep.add(False, condition="R4", j=j, note=str(exc))
            continue
        rep.add(k <= core.m[mu], condition="R4", j=j, k=k, m=core.m[mu])
    return rep


def build_operator(
    core: CoreTree,
    r: Sequence[int],
    heights: Sequence[int],
    space: SpaceSpec | None = None,
    c: object = Fraction(1, 2),
    min_start: int = 1,
    relaxed: bool = False,
    **tolerances: object,
) -> tuple[OperatorSpec, Report]:
    """Bundles of the given heights, ``g_n`` their functionals and ``t_n = r_{n+1}``.

    ``r`` lists ``r_1, ..., r_{N+1}`` for ``N = len(heights)`` bundles. Unless
    ``relaxed`` is set, a failed R3 or R4 check aborts; tolerances are passed
    to the bundle builder and also mark the run as relaxed.
    """
    space = space or SpaceSpec()
    c = parse_rational(c)
    if len(r) != len(heights) + 1 and heights:
        raise ValueError(f"need {len(heights) + 1} values of r for {len(heights)} bundles")
    if any(b <= a for a, b in zip(r, r[1:])):
        raise ValueError("r must be strictly increasing")
    relaxed = relaxed or any(v is not None for v in tolerances.values())
    rep = r_conditions(core, r, space, c)
    if not rep and not relaxed:
        bad = rep.failures()[0]
        raise ValueError(f"{bad['condition']} fails at j = {bad['j']}")
    bundles = []
    pos = min_start
    for h in heights:
        b = build_ris_bundle(core, h, pos, space, **tolerances)
        if b.x.minsupp < b.p_n:
            b = build_ris_bundle(core, h, max(pos, b.p_n), space, **tolerances)
        bundles.append(b)
        pos = b.x.maxsupp + 1
    T = OperatorSpec(
        [b.f for b in bundles],
        list(r[1:]) if heights else [],
        space,
        list(r),
        core,
        list(heights),
        c,
        relaxed or not rep,
        bundles,
    )
    rep.premise("premises-relaxed", not T.relaxed)
    return T, rep


def apply(T: OperatorSpec, x: FiniteVector) -> FiniteVector:
    """``sum_n g_n(x) e_{t_n}`` exactly."""
    return FiniteVector.from_pairs((t, evaluate(g, x, T.space)) for g, t in zip(T.functionals, T.targets))


# -- the general boundedness estimate -----------------------------------------


@dataclass(frozen=True)
class Prop21Bound:
    value: Fraction
    partial: Fraction
    tail: Fraction | None
    certified: bool


def geometric_tail(a: object, p: object, b: object, s: object) -> Callable[[int], Fraction]:
    """Closed-form tail of ``sum_{j>J} (eps_j j + 4 eps_j N_j)`` for ``eps_j = a p^j``, ``N_j = b s^j``."""
    a, p, b, s = (parse_rational(v) for v in (a, p, b, s))
    if not (0 < p < 1 and 0 < p * s < 1):
        raise ValueError("need 0 < p < 1 and 0 < p s < 1 for a convergent tail")

    def tail(J: int) -> Fraction:
        first = a * p ** (J + 1) * ((J + 1) - J * p) / (1 - p) ** 2
        second = 4 * a * b * (p * s) ** (J + 1) / (1 - p * s)
        return first + second

    return tail


def prop21_bound(
    eps: Sequence[object],
    N: Sequence[int],
    J: int | None = None,
    tail: Callable[[int], Fraction] | object | None = None,
) -> Prop21Bound:
    """``sum_{j<=J} (eps_j j + 4 eps_j N_j)`` plus a certified tail when one is supplied."""
    eps = [parse_rational(e) for e in eps]
    if len(eps) != len(N):
        raise ValueError("eps and N must have equal length")
    J = len(eps) if J is None else J
    if J > len(eps):
        raise ValueError("truncation beyond the supplied terms")
    partial = sum((e * j + 4 * e * n for j, (e, n) in enumerate(zip(eps[:J], N[:J]), start=1)), Fraction(0))
    if tail is None:
        return Prop21Bound(partial, partial, None, False)
    t = tail(J) if callable(tail) else parse_rational(tail)
    return Prop21Bound(partial + t, partial, t, True)


# -- certificates for sums of functionals -------------------------------------


def _add_coeffs(acc: dict[int, Fraction], f: NormingTree, space: SpaceSpec, scale: Fraction = Fraction(1)) -> None:
    for i, v in coefficients(f, space).items():
        acc[i] = acc.get(i, Fraction(0)) + scale * v


def _label_set_ok(labels: Sequence[int], level: int, r: int) -> tuple[bool, bool]:
    return is_member(labels, FamilyKind("S", r)), min(labels) > level


def check_lemma53(
    bundles: Mapping[int, RisBundle],
    beta: tuple[int, ...],
    r: int,
    c: object,
    space: SpaceSpec | None = None,
    probes: bool = True,
) -> Report:
    """Certificate ``g`` for ``sum_n sum_{v(alpha)=beta} f_alpha^n`` and the ratio bound ``<= 1/c``."""
    c = parse_rational(c)
    labels = sorted(bundles)
    if not labels:
        raise ValueError("at least one bundle is required")
    first = bundles[labels[0]]
    space = space or first.space
    core = first.core
    beta = tuple(beta)
    rep = Report(f"lemma53: beta={list(beta)}, r={r}")
    in_family, above = _label_set_ok(labels, len(beta), r)
    rep.premise("F in S_r", in_family, str(labels))
    rep.premise("F > |beta|", above)
    m = core.m[beta]
    o = core.ord(beta)
    try:
        k = compute_k_r(space.theta, c, r + o)
        rep.premise("m_beta >= k_(r+ord)", m >= k, f"m = {m}, k = {k}")
    except RatioError as exc:
        rep.premise("m_beta >= k_(r+ord)", False, str(exc))
    nodes = []
    for n in labels:
        b = bundles[n]
        if b.core != core:
            raise ValueError("bundles must share a core tree")
        if len(beta) >= b.height:
            raise ValueError(f"bundle {n} of height {b.height} has no inner node on level {len(beta)}")
        nodes.extend((b, nd) for nd in b.with_core(beta))
    nodes.sort(key=lambda bn: bn[1].vector.minsupp)
    children = [b.nodes[p].functional for b, nd in nodes for p in nd.children]
    children.sort(key=lambda f: support_of(f)[0])
    weight_index = m + o + r
    g = Node(weight_index, tuple(children))
    v = validate(g, space)
    rep.add(bool(v), check="certificate", weight_index=weight_index, reason=v.reason or "valid")
    ratio = space.weight(m) / space.weight(weight_index)
    total: dict[int, Fraction] = {}
    for _, nd in nodes:
        _add_coeffs(total, nd.functional, space)
    scaled: dict[int, Fraction] = {}
    _add_coeffs(scaled, g, space, ratio)
    rep.add(total == scaled, check="identity", ratio=ratio)
    rep.add(ratio <= 1 / c, check="ratio", ratio=ratio, bound=1 / c)
    if probes and nodes:
        y = FiniteVector()
        for _, nd in nodes:
            y = y + nd.vector
        value = sum((evaluate(nd.functional, y, space) for _, nd in nodes), Fraction(0))
        rep.witnesses.append({"check": "dual lower bound", "value": value / norm(y, space), "upper": ratio})
    return rep


def check_lemma54(
    bundles: Mapping[int, RisBundle],
    j: int,
    r: int,
    c: object,
    space: SpaceSpec | None = None,
) -> Report:
    """Decomposition of ``sum_n f_n`` over ``I_j`` and the total ``<= n_j / c``."""
    c = parse_rational(c)
    labels = sorted(bundles)
    first = bundles[labels[0]]
    space = space or first.space
    core = first.core
    mu = core.enumeration[j]
    rep = Report(f"lemma54: j={j}, r={r}")
    in_family, above = _label_set_ok(labels, len(mu), r)
    rep.premise("F in S_r", in_family, str(labels))
    rep.premise("F > |mu_j|", above)
    I = core.I(j)
    nj = len(I)
    lhs: dict[int, Fraction] = {}
    for n in labels:
        _add_coeffs(lhs, bundles[n].f, space)
        for nd in bundles[n].with_core(mu):
            _add_coeffs(lhs, nd.functional, space, -core.c(mu, space))
    rhs: dict[int, Fraction] = {}
    total = Fraction(0)
    for beta in I:
        for n in labels:
            for nd in bundles[n].with_core(beta):
                _add_coeffs(rhs, nd.functional, space, core.c(beta, space))
        sub = check_lemma53(bundles, beta, r, c, space, probes=False)
        ratio = next(w["ratio"] for w in sub.witnesses if w.get("check") == "ratio")
        total += ratio
        premise_ok = sub.premises_hold
        rep.add(bool(sub), beta=list(beta), ratio=ratio, premises=premise_ok)
    clean = lambda d: {i: v for i, v in d.items() if v != 0}
    rep.add(clean(lhs) == clean(rhs), check="decomposition", n_j=nj)
    rep.add(total <= Fraction(nj) / c, check="total", total=total, bound=Fraction(nj) / c)
    return rep


# -- non-compactness and singularity probes -----------------------------------


def noncompactness_witness(T: OperatorSpec, bundles: Sequence[RisBundle] | None = None) -> tuple[Fraction, Report]:
    """``min_{n != m} ||T u_n - T u_m||`` for the normalized bundle vectors ``u_n``."""
    bundles = list(bundles if bundles is not None else T.bundles)
    if len(bundles) < 2:
        raise ValueError("at least two bundles are needed")
    xs = [b.x for b in bundles]
    if any(a.coords == b.coords for a, b in itertools.combinations(xs, 2)):
        raise ValueError("bundles must be distinct")
    space = T.space
    norms = [norm(x, space) for x in xs]
    images = [apply(T, x.scale(1 / nx)) for x, nx in zip(xs, norms)]
    delta = min(norm(a - b, space) for a, b in itertools.combinations(images, 2))
    rep = Report("non-compactness witness")
    premises = all(nx <= 3 and evaluate(b.f, b.x, space) == 1 for b, nx in zip(bundles, norms))
    rep.premise("bundle norms <= 3 and f(x) = 1", premises)
    rep.add(delta > 0, check="separated", delta=delta)
    if premises:
        rep.add(delta >= Fraction(1, 3), check="delta >= 1/3", delta=delta)
    return delta, rep


def estimate_rhs(core: CoreTree, j0: int, c: object, C: object = 1) -> Fraction:
    """``1/j0 + 8/(c 2^(j0-1)) + C/(c 2^(k0-1))`` with ``mu_j0`` a successor of ``mu_k0``."""
    c, C = parse_rational(c), parse_rational(C)
    if j0 < 1:
        raise ValueError("j0 must be positive")
    mu = core.enumeration[j0]
    k0 = core.index(mu[:-1])
    return Fraction(1, j0) + 8 / (c * Fraction(2) ** (j0 - 1)) + C / (c * Fraction(2) ** (k0 - 1))


_STEPS = (Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-1, 2), Fraction(1, 4), Fraction(-1, 4))


def singularity_probe(
    T: OperatorSpec,
    probes: Sequence[FiniteVector],
    j0: int,
    max_evaluations: int = 200,
) -> Report:
    """Search rational combinations of ``probes`` for a unit vector with small ``||x||_G`` and ``||Tx||``.

    Coordinate descent from the first probe; candidates are compared by
    ``(||x||_G, ||Tx||)`` after normalization, ties broken by candidate order.
    """
    if not probes:
        raise ValueError("at least one probe is required")
    if any(not a.precedes(b) for a, b in zip(probes, probes[1:])):
        raise ValueError("probes must form a block sequence")
    if T.core is None or len(T.r) <= j0:
        raise ValueError(f"the operator needs r_{j0 + 1} and a core tree")
    space = T.space
    fam = FamilyKind(space.ladder, T.r[j0])
    rep = Report(f"singularity probe at j0={j0}")
    rep.premise("finite search", True, "evidence only", empirical=True)
    evaluations = 0

    def score(lams: tuple[Fraction, ...]):
        nonlocal evaluations
        evaluations += 1
        x = FiniteVector()
        for lam, p in zip(lams, probes):
            x = x + p.scale(lam)
        if not x:
            return None
        x = x.scale(1 / norm(x, space))
        return g_norm(x, T.functionals, fam, space), norm(apply(T, x), space)

    lams = tuple(Fraction(int(i == 0)) for i in range(len(probes)))
    best = score(lams)
    improved = True
    while improved and evaluations < max_evaluations:
        improved = False
        for i in range(len(probes)):
            for step in _STEPS:
                if evaluations >= max_evaluations:
                    break
                cand = lams[:i] + (lams[i] + step,) + lams[i + 1 :]
                s = score(cand)
                if s is not None and s < best:
                    lams, best, improved = cand, s, True
    rhs = estimate_rhs(T.core, j0, T.c)
    rep.witnesses.append(
        {
            "g_norm": best[0],
            "image_norm": best[1],
            "coefficients": list(lams),
            "evaluations": evaluations,
            "rhs": rhs,
            "budget_exhausted": evaluations >= max_evaluations,
        }
    )
    rep.add(best[1] <= rhs, check="image below estimate", image_norm=best[1], rhs=rhs)
    return rep
