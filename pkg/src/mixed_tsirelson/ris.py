"""Core trees, periodic averages and vectors with a periodic RIS tree-analysis.

A bundle is built bottom-up: depth ``n-1`` nodes are scaled basic averages
over unit vectors, shallower nodes are scaled periodic averages of their
children, and the children of a node mapped to core node ``mu`` cycle
through ``mu``'s successors. Alongside every vector ``x_alpha`` the builder
assembles the associated functional ``f_alpha``; ``f(x) = 1`` holds by
construction and is re-checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import prod
from typing import Callable, Iterable, Mapping, Sequence

from .averages import (
    MAX_SUPPORT,
    ConstructionError,
    SpecialAverage,
    _pieces_end,
    _uniform_of_pieces,
    check_scc,
    make_basic_average,
)
from .families import FamilyKind, is_admissible, is_member
from .norm import norm, weighted_norm
from .reports import Report
from .space import SpaceSpec
from .trees import Leaf, Node, NormingTree, evaluate, support_of, tree_from_json, tree_to_json, validate, walk
from .vectors import FiniteVector, format_rational, parse_rational

__all__ = [
    "CoreTree",
    "RisParams",
    "RisBundle",
    "BundleNode",
    "check_p_conditions",
    "make_periodic_average",
    "build_ris_bundle",
    "check_prop43",
    "check_lemma410",
    "check_r_conditions",
    "greedy_q_ladder",
    "node_params",
    "bundle_p_reports",
    "periodic_instance",
    "PeriodicInstance",
    "bundle_invariants",
    "is_skipped",
    "skipped_sum_check",
]

Path = tuple[int, ...]
_PATTERN_STARTS = 64


# -- core trees ---------------------------------------------------------------


@dataclass(frozen=True)
class CoreTree:
    """A finite truncation of a core tree: node paths with weight parameters ``m``.

    Children of ``mu`` are ``mu + (1,)``, ..., ``mu + (M_mu,)``. Nodes are
    enumerated level by level and lexicographically within a level, so the
    root is ``mu_0`` and ``|mu_j| <= j``.
    """

    m: Mapping[Path, int]

    def __post_init__(self) -> None:
        m = {tuple(k): int(v) for k, v in dict(self.m).items()}
        if () not in m:
            raise ValueError("a core tree needs a root")
        for path, val in m.items():
            if val < 1:
                raise ValueError(f"parameter m at {path} must be positive")
            if path and path[:-1] not in m:
                raise ValueError(f"node {path} has no parent")
            if path and path[-1] > 1 and path[:-1] + (path[-1] - 1,) not in m:
                raise ValueError(f"node {path} has a missing elder sibling")
            if path and path[-1] < 1:
                raise ValueError(f"child labels start at 1, got {path}")
        object.__setattr__(self, "m", m)

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.m.items())))

    @classmethod
    def from_json(cls, data: Mapping) -> "CoreTree":
        m: dict[Path, int] = {}

        def walk(node: Mapping, path: Path) -> None:
            m[path] = int(node["m"])
            for i, child in enumerate(node.get("children", []), start=1):
                walk(child, path + (i,))

        walk(data, ())
        return cls(m)

    def to_json(self) -> dict:
        def build(path: Path) -> dict:
            out: dict = {"m": self.m[path]}
            kids = self.children(path)
            if kids:
                out["children"] = [build(k) for k in kids]
            return out

        return build(())

    @classmethod
    def regular(cls, levels: Sequence[tuple[int, int]]) -> "CoreTree":
        """Every node at level ``l`` gets parameter ``levels[l][0]`` and ``levels[l][1]`` children."""
        m: dict[Path, int] = {}
        frontier: list[Path] = [()]
        for depth, (mval, branching) in enumerate(levels):
            nxt = []
            for path in frontier:
                m[path] = mval
                if depth + 1 < len(levels):
                    nxt.extend(path + (i,) for i in range(1, branching + 1))
            frontier = nxt
        return cls(m)

    def children(self, mu: Path) -> list[Path]:
        out = []
        i = 1
        while mu + (i,) in self.m:
            out.append(mu + (i,))
            i += 1
        return out

    def M(self, mu: Path) -> int:
        return len(self.children(mu))

    @property
    def depth(self) -> int:
        """Largest level present; children of this level are not known."""
        return max(len(p) for p in self.m)

    @cached_property
    def enumeration(self) -> tuple[Path, ...]:
        return tuple(sorted(self.m, key=lambda p: (len(p), p)))

    def index(self, mu: Path) -> int:
        return self.enumeration.index(mu)

    def ord(self, mu: Path) -> int:
        return sum(self.m[mu[:i]] for i in range(len(mu)))

    def c(self, mu: Path, space: SpaceSpec) -> Fraction:
        return prod((space.weight(self.m[mu[:i]]) for i in range(len(mu))), start=Fraction(1))

    def I(self, j: int) -> list[Path]:
        """Same-level nodes after ``mu_j`` together with successors of same-level nodes before it."""
        mu = self.enumeration[j]
        if len(mu) >= self.depth:
            raise ValueError(f"successors of level {len(mu)} are outside the truncation")
        level = [p for p in self.enumeration if len(p) == len(mu)]
        later = [p for p in level if p > mu]
        below = [c for p in level if p < mu for c in self.children(p)]
        return later + below

    def n(self, j: int) -> int:
        return len(self.I(j))

    def level_weights(self, level: int) -> set[int]:
        return {v for p, v in self.m.items() if len(p) == level}


# -- periodic averages --------------------------------------------------------


@dataclass(frozen=True)
class RisParams:
    """Parameters of a periodic RIS: ``n_i``, ``q_i`` for ``i = 0..M+1`` and the tolerances."""

    n0: int
    eps: Fraction
    eps_tilde: Fraction
    M: int
    N: int
    n: tuple[int, ...]
    q: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", parse_rational(self.eps))
        object.__setattr__(self, "eps_tilde", parse_rational(self.eps_tilde))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "q", tuple(int(v) for v in self.q))
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if len(self.q) != self.M + 2 or len(self.n) < self.M + 1:
            raise ValueError("need q_0..q_{M+1} and n_0..n_M")
        if self.n[0] != self.n0:
            raise ValueError("n_0 must equal n0")

    def to_json(self) -> dict:
        return {
            "n0": self.n0,
            "eps": format_rational(self.eps),
            "eps_tilde": format_rational(self.eps_tilde),
            "M": self.M,
            "N": self.N,
            "n": list(self.n),
            "q": list(self.q),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RisParams":
        return cls(
            int(data["n0"]),
            parse_rational(data["eps"]),
            parse_rational(data["eps_tilde"]),
            int(data["M"]),
            int(data["N"]),
            tuple(data["n"]),
            tuple(data["q"]),
        )


def greedy_q_ladder(
    n: Sequence[int], eps_tilde: Fraction, space: SpaceSpec, q0: int | None = None, q1: int | None = None
) -> tuple[int, ...]:
    """``q_0 .. q_{len(n)}`` chosen as small as the spacing rules allow.

    ``q_{i+1}`` is the least index above ``n_i`` with ``theta_q <= theta_{n_i}^2``
    (and ``theta_q <= eps_tilde theta_{n_0}^2 / 2`` for ``i = 0``), unless
    fixed by ``q0``/``q1``.
    """
    q = [max(n[0] - 1, 0) if q0 is None else q0]
    for i, ni in enumerate(n):
        if i == 0 and q1 is not None:
            q.append(q1)
            continue
        target = space.weight(ni) ** 2
        if i == 0:
            target = min(target, eps_tilde * space.weight(ni) ** 2 / 2)
        q.append(_least_q(target, space, ni))
    return tuple(q)


def _p1_report(params: RisParams, space: SpaceSpec, rep: Report, w_value: int | None) -> None:
    chain = []
    for i in range(params.M + 1):
        chain += [params.q[i], params.n[i]]
    chain.append(params.q[params.M + 1])
    rep.premise("P1 ladder interleaves", all(a < b for a, b in zip(chain, chain[1:])), str(chain))
    th = space.weight
    rep.premise(
        "P1 theta_q1 <= eps_tilde theta_n0^2 / 2",
        th(params.q[1]) <= params.eps_tilde * th(params.n0) ** 2 / 2,
    )
    for i in range(params.M + 1):
        rep.premise(f"P1 theta_q{i + 1} <= theta_n{i}^2", th(params.q[i + 1]) <= th(params.n[i]) ** 2)
    rep.premise("P1 index M+1 spacing", True, "unchecked: the index range stops at M", empirical=True)
    if w_value is None:
        rep.premise("P1 n0 >= w(eps, q0)", True, "unchecked: no w value supplied", empirical=True)
    else:
        rep.premise("P1 n0 >= w(eps, q0)", params.n0 >= w_value, f"w = {w_value}", empirical=True)


def check_p_conditions(
    xs: Sequence[FiniteVector],
    params: RisParams,
    c: object,
    space: SpaceSpec | None = None,
    w_value: int | None = None,
) -> Report:
    """Verify the growth conditions of a periodic RIS exactly via weighted norms.

    Position ``i`` in a period must satisfy ``weighted_norm(x, j) <= c(1+eps~) theta_j``
    for ``j <= q_i`` and ``weighted_norm(x, j) <= c(1+eps~) theta_{n_i}`` for
    ``j >= q_{i+1}``; above the mass guard the second bound follows from
    ``weighted_norm(x, j) <= theta_j l1(x)``.
    """
    space = space or SpaceSpec()
    if len(xs) != params.N * params.M:
        raise ValueError(f"expected {params.N * params.M} vectors, got {len(xs)}")
    if any(not a.precedes(b) for a, b in zip(xs, xs[1:])):
        raise ValueError("vectors must form a block sequence")
    c = parse_rational(c)
    rep = Report("periodic RIS growth conditions")
    _p1_report(params, space, rep, w_value)
    scale = c * (1 + params.eps_tilde)
    for p, x in enumerate(xs, start=1):
        i = (p - 1) % params.M + 1
        for j in range(1, params.q[i] + 1):
            lhs = weighted_norm(x, j, space)
            rep.add(lhs <= scale * space.weight(j), condition="P2", p=p, j=j, lhs=lhs)
        bound = scale * space.weight(params.n[i])
        mass = x.l1()
        j = params.q[i + 1]
        while True:
            if space.weight(j) * mass <= bound:
                rep.add(True, condition="P3", p=p, j=f">={j}", lhs="mass guard")
                break
            lhs = weighted_norm(x, j, space)
            rep.add(lhs <= bound, condition="P3", p=p, j=j, lhs=lhs)
            j += 1
    return rep


def make_periodic_average(
    xs: Sequence[FiniteVector], params: RisParams | None, coefficients: SpecialAverage
) -> FiniteVector:
    """``sum_p a_p x_p`` where ``coefficients`` sits on the max-supports of the blocks."""
    if params is not None and len(xs) != params.N * params.M:
        raise ValueError(f"expected {params.N * params.M} vectors, got {len(xs)}")
    if any(not x for x in xs):
        raise ValueError("blocks must be non-zero")
    if any(not a.precedes(b) for a, b in zip(xs, xs[1:])):
        raise ValueError("vectors must form a block sequence")
    maxima = tuple(x.maxsupp for x in xs)
    if coefficients.support != maxima:
        raise ValueError(f"coefficient support {coefficients.support} is not aligned with max-supports {maxima}")
    out = FiniteVector()
    for x, (_, a) in zip(xs, coefficients.vector):
        out = out + x.scale(a)
    return out


# -- bundles ------------------------------------------------------------------


@dataclass
class BundleNode:
    path: Path
    core: Path | None
    vector: FiniteVector
    functional: NormingTree
    weight: Fraction = Fraction(1)
    children: list[Path] = field(default_factory=list)
    eps: Fraction | None = None
    eps_tilde: Fraction | None = None
    periods: int = 1


@dataclass
class RisBundle:
    """A vector with a periodic RIS tree-analysis and its associated functional."""

    core: CoreTree
    height: int
    nodes: dict[Path, BundleNode]
    ladder: str
    relaxed: bool
    p_n: int
    space: SpaceSpec

    @property
    def x(self) -> FiniteVector:
        return self.nodes[()].vector

    @property
    def f(self) -> NormingTree:
        return self.nodes[()].functional

    def v(self) -> list[tuple[Path, Path]]:
        return sorted((p, n.core) for p, n in self.nodes.items() if n.core is not None)

    def at_level(self, level: int) -> list[BundleNode]:
        return [n for p, n in sorted(self.nodes.items()) if len(p) == level]

    def with_core(self, mu: Path) -> list[BundleNode]:
        return [n for p, n in sorted(self.nodes.items(), key=lambda kv: kv[1].vector.minsupp) if n.core == mu]

    def to_json(self) -> dict:
        return {
            "vector": self.x.to_json(),
            "functional": tree_to_json(self.f),
            "v": [[list(p), list(c)] for p, c in self.v()],
            "height": self.height,
            "core": self.core.to_json(),
            "ladder": self.ladder,
            "relaxed": self.relaxed,
            "p_n": self.p_n,
            "space": self.space.to_json(),
            "nodes": [
                {
                    "path": list(p),
                    "core": None if n.core is None else list(n.core),
                    "vector": n.vector.to_json(),
                    "weight": format_rational(n.weight),
                    "eps": None if n.eps is None else format_rational(n.eps),
                    "eps_tilde": None if n.eps_tilde is None else format_rational(n.eps_tilde),
                    "periods": n.periods,
                }
                for p, n in sorted(self.nodes.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RisBundle":
        root = tree_from_json(data["functional"])
        subtrees = dict(walk(root))
        nodes: dict[Path, BundleNode] = {}
        for item in data["nodes"]:
            path = tuple(item["path"])
            # tree paths in walk() are 0-based child positions
            f = subtrees[tuple(k - 1 for k in path)]
            opt = lambda v: None if v is None else parse_rational(v)
            nodes[path] = BundleNode(
                path,
                None if item["core"] is None else tuple(item["core"]),
                FiniteVector.from_json(item["vector"]),
                f,
                parse_rational(item["weight"]),
                eps=opt(item["eps"]),
                eps_tilde=opt(item["eps_tilde"]),
                periods=int(item["periods"]),
            )
        for path in nodes:
            if path:
                nodes[path[:-1]].children.append(path)
        for node in nodes.values():
            node.children.sort()
        return cls(
            CoreTree.from_json(data["core"]),
            int(data["height"]),
            nodes,
            str(data["ladder"]),
            bool(data["relaxed"]),
            int(data["p_n"]),
            SpaceSpec.from_json(data["space"]),
        )


def _canonical_eps(space: SpaceSpec, m: int, periodic: bool) -> tuple[Fraction, Fraction | None]:
    th = space.weight(m)
    if periodic:
        return th**3 / 4, th**2
    return th**2, None


def _coefficient_pattern(
    m: int, eps: Fraction, M: int, ladder: str, skip: int, size: int | None = None
) -> list[Fraction]:
    """Coefficients of an ``(m, eps)`` average whose length is a multiple of ``M``.

    ``skip`` selects later candidates when an earlier pattern fails on the
    actual block maxima.
    """
    if ladder == "A":
        if size is not None and size != m:
            raise ConstructionError(f"uniform coefficient averages of rank {m} have length {m}, not {size}")
        if m % M:
            raise ConstructionError(f"on the A ladder M = {M} must divide m = {m}")
        if Fraction(1, m) >= eps:
            raise ConstructionError(f"1/{m} >= {eps}: no uniform coefficient average")
        return [Fraction(1, m)] * m
    lowest = int(1 / eps) + 1
    if m == 1:
        if size is not None:
            if size % M or size < lowest or skip:
                raise ConstructionError(f"no rank-1 pattern of length {size} for eps = {eps} and M = {M}")
            return [Fraction(1, size)] * size
        d = -(-lowest // M) * M + skip * M
        return [Fraction(1, d)] * d
    found = 0
    for start in range(lowest, _PATTERN_STARTS):
        for d in range(lowest, start + 1):
            try:
                _pieces_end(m, start, d, MAX_SUPPORT)
            except ConstructionError:
                break
            coords, _ = _uniform_of_pieces(m, start, d)
            vec = FiniteVector.from_mapping(coords)
            if len(vec) % M or (size is not None and len(vec) != size):
                continue
            if not check_scc(SpecialAverage(vec, m, eps, "S")):
                continue
            if found == skip:
                return vec.values()
            found += 1
            break
    raise ConstructionError(f"no ({m}, {eps}) coefficient pattern of length divisible by {M}")


class _Builder:
    def __init__(self, core, height, space, eps_basic, eps_periodic, eps_tilde):
        self.core = core
        self.height = height
        self.space = space
        self.ladder = space.ladder
        self.eps_basic = eps_basic
        self.eps_periodic = eps_periodic
        self.eps_tilde = eps_tilde
        self.nodes: dict[Path, BundleNode] = {}

    def build(self, path: Path, mu: Path, start: int) -> tuple[list[BundleNode], int]:
        """Nodes of the subtree at ``path`` (root first) and the next free index."""
        level = len(path)
        m = self.core.m[mu]
        theta = self.space.weight(m)
        if level == self.height - 1:
            eps = self.eps_basic if self.eps_basic is not None else _canonical_eps(self.space, m, False)[0]
            avg = make_basic_average(m, eps, start, self.ladder)
            vec = avg.vector.scale(1 / theta)
            leaves = tuple(Leaf(1, i) for i in avg.support)
            node = BundleNode(path, mu, vec, Node(m, leaves), eps=eps)
            sub = [node]
            for k, i in enumerate(avg.support, start=1):
                sub.append(BundleNode(path + (k,), None, FiniteVector.unit(i), Leaf(1, i)))
                node.children.append(path + (k,))
            return sub, avg.vector.maxsupp + 1
        kids = self.core.children(mu)
        if not kids:
            raise ConstructionError(f"core node {mu} has no successors but the bundle needs level {level + 1}")
        M = len(kids)
        canonical_eps, canonical_tilde = _canonical_eps(self.space, m, True)
        eps = self.eps_periodic if self.eps_periodic is not None else canonical_eps
        tilde = self.eps_tilde if self.eps_tilde is not None else canonical_tilde
        for skip in range(8):
            pattern = _coefficient_pattern(m, eps, M, self.ladder, skip)
            P = len(pattern)
            cur = max(start, P)
            for _ in range(16):
                sub: list[BundleNode] = []
                heads: list[BundleNode] = []
                pos = cur
                for p in range(1, P + 1):
                    child_mu = kids[(p - 1) % M]
                    child_nodes, pos = self.build(path + (p,), child_mu, pos)
                    heads.append(child_nodes[0])
                    sub.extend(child_nodes)
                maxima = [h.vector.maxsupp for h in heads]
                minima = [h.vector.minsupp for h in heads]
                coeff = SpecialAverage(FiniteVector(tuple(zip(maxima, pattern))), m, eps, self.ladder)
                fam = FamilyKind(self.ladder, m)
                if check_scc(coeff) and is_member(minima, fam):
                    vec = make_periodic_average([h.vector for h in heads], None, coeff).scale(1 / theta)
                    for h, a in zip(heads, pattern):
                        h.weight = a
                    node = BundleNode(
                        path,
                        mu,
                        vec,
                        Node(m, tuple(h.functional for h in heads)),
                        children=[h.path for h in heads],
                        eps=eps,
                        eps_tilde=tilde,
                        periods=P // M,
                    )
                    return [node] + sub, pos
                cur = max(cur + 1, min(minima) + (P - 1))
        raise ConstructionError(f"could not align a periodic average at node {path}")


def _p_n(core: CoreTree, height: int) -> int:
    """Largest sum of ``m`` along a core branch of ``height`` nodes (bounds the support rank)."""

    def best(mu: Path, left: int) -> int:
        if left == 0:
            return 0
        here = core.m[mu]
        kids = core.children(mu) if left > 1 else []
        return here + max((best(k, left - 1) for k in kids), default=0)

    return best((), height)


def build_ris_bundle(
    core: CoreTree,
    height: int,
    min_start: int = 1,
    space: SpaceSpec | None = None,
    eps_basic: object | None = None,
    eps_periodic: object | None = None,
    eps_tilde: object | None = None,
) -> RisBundle:
    """Build a vector with periodic RIS tree-analysis of ``height`` modelled on ``core``.

    Tolerances default to the canonical choices ``theta^2`` (basic level) and
    ``theta^3/4``, ``theta^2`` (periodic levels); passing any of them marks
    the bundle as relaxed. All structural invariants are checked before the
    bundle is returned.
    """
    space = space or SpaceSpec()
    if height < 1:
        raise ValueError("height must be at least 1")
    if core.depth < height - 1:
        raise ValueError(f"core truncated at depth {core.depth} cannot carry height {height}")
    relaxed = any(v is not None for v in (eps_basic, eps_periodic, eps_tilde))
    b = _Builder(
        core,
        height,
        space,
        None if eps_basic is None else parse_rational(eps_basic),
        None if eps_periodic is None else parse_rational(eps_periodic),
        None if eps_tilde is None else parse_rational(eps_tilde),
    )
    nodes, _ = b.build((), (), min_start)
    bundle = RisBundle(core, height, {n.path: n for n in nodes}, space.ladder, relaxed, _p_n(core, height), space)
    problems = bundle_invariants(bundle)
    if problems:
        raise ConstructionError("; ".join(problems))
    return bundle


def bundle_invariants(bundle: RisBundle) -> list[str]:
    """Structural invariants of a bundle; an empty list means all hold."""
    space = bundle.space
    out = []
    n = bundle.height
    for path, node in bundle.nodes.items():
        if not node.children and len(path) != n:
            out.append(f"terminal node {path} at depth {len(path)} instead of {n}")
        if len(path) == n and (len(node.vector) != 1 or node.vector.values() != [1]):
            out.append(f"terminal node {path} is not a unit vector")
        if node.core is not None and path:
            parent = bundle.nodes[path[:-1]]
            M = bundle.core.M(parent.core)
            j = (path[-1] - 1) % M + 1
            if node.core != parent.core + (j,):
                out.append(f"node {path} maps to {node.core}, expected {parent.core + (j,)}")
    if bundle.nodes[()].core != ():
        out.append("root must map to the core root")
    for path, node in bundle.nodes.items():
        if len(path) == n - 1:
            m = bundle.core.m[node.core]
            coeffs = node.vector.scale(space.weight(m))
            if not check_scc(SpecialAverage(coeffs, m, node.eps, bundle.ladder)):
                out.append(f"node {path} is not a basic special average")
    report = validate(bundle.f, space)
    if not report:
        out.append(f"functional invalid at {report.path}: {report.reason}")
    value = evaluate(bundle.f, bundle.x, space)
    if value != 1:
        out.append(f"f(x) = {value}, expected 1")
    if not set(support_of(bundle.f)) <= set(bundle.x.support):
        out.append("functional support leaves the vector support")
    for level in range(n):
        got = {bundle.core.m[nd.core] for nd in bundle.at_level(level)}
        expected = {bundle.core.m[p] for p in bundle.core.m if len(p) == level}
        if got != expected:
            out.append(f"level {level} weight indices {sorted(got)} differ from core {sorted(expected)}")
    for mu in bundle.core.m:
        family = bundle.with_core(mu)
        if not family:
            continue
        o = bundle.core.ord(mu)
        blocks = [nd.vector.support for nd in family]
        if o == 0:
            ok = len(blocks) == 1
        else:
            ok = is_admissible(blocks, FamilyKind(bundle.ladder, o))
        if not ok:
            out.append(f"vectors on core node {mu} are not admissible for rank {o}")
    if bundle.ladder == "S" and not is_member(bundle.x.support, FamilyKind("S", bundle.p_n)):
        out.append(f"support not in S({bundle.p_n})")
    return out


def node_params(bundle: RisBundle, path: Path) -> RisParams:
    """Periodic-RIS parameters of an inner node, with q-ladders chained from the ancestors."""
    node = bundle.nodes[path]
    if len(path) >= bundle.height - 1:
        raise ValueError(f"node {path} is not a periodic average")
    space = bundle.space
    core = bundle.core
    q0 = q1 = None
    if path:
        parent = node_params(bundle, path[:-1])
        s = core.children(bundle.nodes[path[:-1]].core).index(node.core) + 1
        q0, q1 = parent.q[s], parent.q[s + 1]
    ns = (core.m[node.core],) + tuple(core.m[k] for k in core.children(node.core))
    q = greedy_q_ladder(ns, node.eps_tilde, space, q0, q1)
    return RisParams(ns[0], node.eps, node.eps_tilde, len(ns) - 1, node.periods, ns, q)


def bundle_p_reports(bundle: RisBundle) -> dict[Path, Report]:
    """Growth conditions at every inner node, on the actual scaled children, with ``c`` their largest norm."""
    out = {}
    for path, node in sorted(bundle.nodes.items()):
        if len(path) >= bundle.height - 1:
            continue
        kids = [bundle.nodes[k].vector for k in node.children]
        c = max(norm(v, bundle.space) for v in kids)
        out[path] = check_p_conditions(kids, node_params(bundle, path), c, bundle.space)
    return out


@dataclass(frozen=True)
class PeriodicInstance:
    x: FiniteVector
    blocks: tuple[FiniteVector, ...]
    coefficients: SpecialAverage
    params: RisParams


def periodic_instance(
    n0: int,
    ns: Sequence[int],
    N: int,
    eps: object,
    eps_tilde: object,
    block_eps: object,
    space: SpaceSpec | None = None,
    min_start: int = 1,
) -> PeriodicInstance:
    """``sum_p a_p x_p`` over ``N`` periods of scaled basic averages of ranks ``ns``.

    Block ``p`` is ``theta_{n_i}^{-1}`` times an ``(n_i, block_eps)`` average with
    ``i = (p-1) mod M + 1``; the coefficients form an ``(n0, eps)`` average of
    length exactly ``N M`` on the block maxima.
    """
    space = space or SpaceSpec()
    eps, eps_tilde, block_eps = parse_rational(eps), parse_rational(eps_tilde), parse_rational(block_eps)
    M = len(ns)
    pattern = _coefficient_pattern(n0, eps, M, space.ladder, 0, size=N * M)
    start = max(min_start, N * M)
    for _ in range(32):
        blocks = []
        pos = start
        for p in range(N * M):
            n = ns[p % M]
            avg = make_basic_average(n, block_eps, pos, space.ladder)
            blocks.append(avg.vector.scale(1 / space.weight(n)))
            pos = avg.vector.maxsupp + 1
        maxima = [b.maxsupp for b in blocks]
        coeff = SpecialAverage(FiniteVector(tuple(zip(maxima, pattern))), n0, eps, space.ladder)
        if check_scc(coeff):
            full = (n0,) + tuple(ns)
            params = RisParams(n0, eps, eps_tilde, M, N, full, greedy_q_ladder(full, eps_tilde, space))
            x = make_periodic_average(blocks, params, coeff)
            return PeriodicInstance(x, tuple(blocks), coeff, params)
        start += 1
    raise ConstructionError("could not align the coefficient average with the blocks")


# -- checkers -----------------------------------------------------------------


def check_prop43(
    x: FiniteVector,
    params: RisParams,
    coefficients: Sequence[Fraction],
    space: SpaceSpec | None = None,
    block_norms: Sequence[Fraction] | None = None,
) -> Report:
    """Norm and weighted-norm bounds for a periodic average ``x = sum a_p x_p``.

    The premise list covers the coefficient condition and the standing
    hypotheses; the conclusions are measured regardless, and the
    unconditional bound is always checked.
    """
    space = space or SpaceSpec()
    th = space.weight
    t0 = th(params.n0)
    t1 = th(1)
    sup_a = max(parse_rational(a) for a in coefficients)
    rep = Report(f"prop43: periodic average bounds at n0={params.n0}")
    lhs42 = 4 * (Fraction(1, params.M) + sup_a)
    rhs42 = (1 - t1) * t0**3
    rep.premise("coefficient condition", lhs42 <= rhs42, f"{format_rational(lhs42)} <= {format_rational(rhs42)}")
    rep.premise("theta_n0 <= 1/10", t0 <= Fraction(1, 10))
    rep.premise("eps, eps_tilde <= theta_n0^2", 0 < params.eps <= t0**2 and 0 < params.eps_tilde <= t0**2)
    if block_norms is not None:
        rep.premise("blocks have norm <= 1", all(v <= 1 for v in block_norms))
    y = x.scale(1 / t0)
    value = norm(y, space)
    rep.add(value <= 1 + 2 * t0, conclusion="norm", lhs=value, rhs=1 + 2 * t0)
    for j in range(1, params.q[0] + 1):
        lhs = weighted_norm(y, j, space)
        rep.add(lhs <= (1 + 3 * t0) * th(j), conclusion="large weights", j=j, lhs=lhs, rhs=(1 + 3 * t0) * th(j))
    bound = (1 + 3 * t0) * t0
    mass = y.l1()
    j = params.q[1]
    while th(j) * mass > bound:
        lhs = weighted_norm(y, j, space)
        rep.add(lhs <= bound, conclusion="small weights", j=j, lhs=lhs, rhs=bound)
        j += 1
    rep.add(True, conclusion="small weights", j=f">={j}", lhs="mass guard", rhs=bound)
    eps1 = (1 + params.eps_tilde) * th(params.n[1])
    if t1 == 1:
        rep.add(True, conclusion="unconditional", lhs=value, rhs="unbounded (theta_1 = 1)")
    else:
        eps2 = 2 * (Fraction(1, params.M) + sup_a) / (1 - t1)
        rhs = (1 + params.eps) * (1 + params.eps_tilde) + (eps1 + eps2) / t0
        rep.add(value <= rhs, conclusion="unconditional", lhs=value, rhs=rhs, eps1=eps1, eps2=eps2)
    return rep


def node_bound(bundle: RisBundle, path: Path) -> Fraction:
    """Product of ``1 + 3 theta_{m_j}`` over core nodes from ``|path|`` down to the basic level."""
    space = bundle.space
    level = len(path)
    return prod(
        (1 + 3 * space.weight(bundle.core.m[mu]) for mu in bundle.core.m if level <= len(mu) < bundle.height),
        start=Fraction(1),
    )


def check_lemma410(bundle: RisBundle, space: SpaceSpec | None = None) -> Report:
    """Node norm products, ``f(x) = 1`` and the two-sided functional bounds."""
    space = space or bundle.space
    rep = Report(f"lemma410: bundle of height {bundle.height}")
    rep.premise("canonical tolerances", not bundle.relaxed)
    for path, node in sorted(bundle.nodes.items()):
        if len(path) >= bundle.height:
            continue
        value = norm(node.vector, space)
        bound = node_bound(bundle, path)
        rep.add(value <= bound, check="node norm", path=list(path), norm=value, bound=bound)
    fx = evaluate(bundle.f, bundle.x, space)
    rep.add(fx == 1, check="f(x)", value=fx)
    total = norm(bundle.x, space)
    lower = fx / total
    rep.add(lower >= Fraction(1, 3), check="functional lower bound", value=lower, norm=total)
    rep.add(bool(validate(bundle.f, space)), check="functional upper bound", certificate="valid tree")
    return rep


WOracle = Callable[[Fraction, int], int]


def check_r_conditions(
    core: CoreTree,
    q: Sequence[int] | None = None,
    space: SpaceSpec | None = None,
    w: WOracle | Mapping | None = None,
) -> Report:
    """Exact checks of the core-tree growth conditions along the enumeration.

    On the A ladder the branching condition reads ``m_j > ...`` (with
    ``M_j = m_j``); on the S ladder it reads ``M_j > ...``.
    """
    space = space or SpaceSpec()
    th = space.weight
    rep = Report("core tree growth conditions")
    t1 = th(1)
    enum = core.enumeration
    for j, mu in enumerate(enum):
        m = core.m[mu]
        tm = th(m)
        rep.add(tm < Fraction(1, 2 ** (j + 1)), condition="R1", j=j, lhs=tm, rhs=Fraction(1, 2 ** (j + 1)))
        branching = m if space.ladder == "A" else core.M(mu)
        if len(mu) >= core.depth and space.ladder == "S":
            rep.witnesses.append({"condition": "R2", "j": j, "holds": None, "note": "successors truncated"})
        elif t1 == 1:
            rep.add(False, condition="R2", j=j, lhs=branching, rhs="infinite (theta_1 = 1)")
        else:
            rhs = 4 / (1 - t1) / tm**4
            rep.add(branching > rhs, condition="R2", j=j, lhs=branching, rhs=rhs)
        if j + 1 < len(enum):
            qj = q[j] if q is not None and j < len(q) else _least_q(tm**4, space)
            q_ok = th(qj) <= tm**4
            if w is None:
                rep.witnesses.append({"condition": "R0", "j": j, "q": qj, "holds": None, "note": "no w oracle"})
                continue
            eps = tm**3 / 4
            try:
                wv = w[(eps, qj)] if isinstance(w, Mapping) else w(eps, qj)
            except (ConstructionError, KeyError) as exc:
                rep.witnesses.append({"condition": "R0", "j": j, "q": qj, "holds": None, "note": str(exc)})
                if rep.verdict == "pass":
                    rep.verdict = "undecided"
                continue
            nxt = core.m[enum[j + 1]]
            rep.add(q_ok and nxt >= wv, condition="R0", j=j, q=qj, w=wv, m_next=nxt, empirical=True)
    return rep


def _least_q(target: Fraction, space: SpaceSpec, above: int = 0) -> int:
    """Least ``q > above`` with ``theta_q <= target``, by doubling then bisection."""
    lo, step = above, 1
    while space.weight(lo + step) > target:
        lo, step = lo + step, step * 2
    hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if space.weight(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


# -- skipped sets ---------------------------------------------------------------


def is_skipped(L: Iterable[int], M: int) -> bool:
    """Pairwise gaps of at least ``M``."""
    elems = sorted(set(L))
    return all(b - a >= M for a, b in zip(elems, elems[1:]))


def skipped_sum_check(a: Sequence[Fraction], L: Iterable[int], M: int) -> tuple[Fraction, Fraction]:
    """``(sum_{j in L} a_j, 1/M + max_{j in L} a_j)`` for a decreasing probability sequence ``a`` (1-based)."""
    a = [parse_rational(v) for v in a]
    if any(v <= 0 for v in a) or sum(a) != 1 or any(y > x for x, y in zip(a, a[1:])):
        raise ValueError("a must be a decreasing sequence of positive numbers summing to 1")
    L = sorted(set(L))
    if not is_skipped(L, M):
        raise ValueError(f"{L} is not {M}-skipped")
    if any(j < 1 or j > len(a) for j in L):
        raise ValueError("indices must lie in 1..len(a)")
    picked = [a[j - 1] for j in L]
    return sum(picked, Fraction(0)), Fraction(1, M) + max(picked, default=Fraction(0))
