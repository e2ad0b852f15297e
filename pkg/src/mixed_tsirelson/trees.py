"""Norming trees: certificates that a functional lies in the norming set.

A tree is either a signed coordinate functional ``Leaf(sign, index)`` or an
operation ``Node(op, children)`` denoting ``theta_op * (sum of children)``.
A tree is valid when at every node the children have successive supports
whose minima form a member of ``F_op``; valid trees evaluate to at most the
norm of any vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence, Union

from .families import is_member
from .space import SpaceSpec
from .vectors import FiniteVector

__all__ = [
    "Leaf",
    "Node",
    "NormingTree",
    "Validation",
    "evaluate",
    "validate",
    "coefficients",
    "support_of",
    "tree_to_json",
    "tree_from_json",
    "walk",
    "depth",
]


@dataclass(frozen=True)
class Leaf:
    sign: int
    index: int

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError(f"leaf sign must be +1 or -1, got {self.sign!r}")
        if isinstance(self.index, bool) or not isinstance(self.index, int) or self.index < 1:
            raise ValueError(f"leaf index must be a positive integer, got {self.index!r}")


@dataclass(frozen=True)
class Node:
    op: int
    children: tuple["NormingTree", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))


NormingTree = Union[Leaf, Node]


@dataclass(frozen=True)
class Validation:
    """Outcome of ``validate``; falsy when some node breaks admissibility."""

    ok: bool
    path: tuple[int, ...] = ()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "path": list(self.path), "reason": self.reason}


def walk(f: NormingTree, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], NormingTree]]:
    """Pre-order traversal yielding ``(path, subtree)``."""
    stack = [(path, f)]
    while stack:
        p, node = stack.pop()
        yield p, node
        if isinstance(node, Node):
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((p + (i,), node.children[i]))


def depth(f: NormingTree) -> int:
    return max(len(p) for p, _ in walk(f))


def support_of(f: NormingTree) -> tuple[int, ...]:
    return tuple(sorted({node.index for _, node in walk(f) if isinstance(node, Leaf)}))


def coefficients(f: NormingTree, space: SpaceSpec) -> dict[int, Fraction]:
    """The functional as a map ``index -> coefficient``."""
    out: dict[int, Fraction] = {}
    weights: dict[int, Fraction] = {}
    stack: list[tuple[NormingTree, Fraction]] = [(f, Fraction(1))]
    while stack:
        node, scale = stack.pop()
        if isinstance(node, Leaf):
            out[node.index] = out.get(node.index, Fraction(0)) + scale * node.sign
            continue
        w = weights.get(node.op)
        if w is None:
            w = weights[node.op] = space.weight(node.op)
        for child in node.children:
            stack.append((child, scale * w))
    return {i: v for i, v in sorted(out.items()) if v}


def evaluate(f: NormingTree, x: FiniteVector, space: SpaceSpec) -> Fraction:
    """Exact value ``f(x)``."""
    if not x:
        return Fraction(0)
    xs = x.as_dict()
    return sum((c * xs[i] for i, c in coefficients(f, space).items() if i in xs), Fraction(0))


def validate(f: NormingTree, space: SpaceSpec) -> Validation:
    """Check successive supports and ``F_op``-admissible minima at every node."""
    spans: dict[tuple[int, ...], tuple[int, int]] = {}
    nodes = list(walk(f))
    for path, node in reversed(nodes):
        if isinstance(node, Leaf):
            spans[path] = (node.index, node.index)
            continue
        if node.op < 1:
            return Validation(False, path, f"operation index {node.op} is not positive")
        if not node.children:
            return Validation(False, path, "operation node without children")
        kids = [spans[path + (i,)] for i in range(len(node.children))]
        for i in range(len(kids) - 1):
            if kids[i][1] >= kids[i + 1][0]:
                return Validation(
                    False,
                    path,
                    f"children {i} and {i + 1} are not successive (max {kids[i][1]} >= min {kids[i + 1][0]})",
                )
        minima = [lo for lo, _ in kids]
        if not is_member(minima, space.family(node.op)):
            return Validation(False, path, f"minima {minima} not in {space.family(node.op)}")
        spans[path] = (kids[0][0], kids[-1][1])
    return Validation(True)


def tree_to_json(f: NormingTree) -> dict:
    if isinstance(f, Leaf):
        return {"leaf": [f.sign, f.index]}
    return {"op": f.op, "children": [tree_to_json(c) for c in f.children]}


def tree_from_json(data: Mapping) -> NormingTree:
    if "leaf" in data:
        sign, index = data["leaf"]
        return Leaf(int(sign), int(index))
    if "op" in data:
        return Node(int(data["op"]), tuple(tree_from_json(c) for c in data.get("children", [])))
    raise ValueError("a norming tree is {'leaf': [sign, index]} or {'op': n, 'children': [...]}")


def blocks_are_successive(fs: Sequence[NormingTree]) -> bool:
    supports = [support_of(f) for f in fs]
    nonempty = [s for s in supports if s]
    return all(a[-1] < b[0] for a, b in zip(nonempty, nonempty[1:]))
