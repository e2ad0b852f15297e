import random
from fractions import Fraction

import pytest

from mixed_tsirelson.families import FamilyKind
from mixed_tsirelson.norm import (
    brute_force_norm,
    coordinate_functional_bound,
    g_norm,
    guarded_norm,
    norm,
    norm_bounds,
    optimizer_tree,
    weighted_norm,
    weighted_optimizer_tree,
)
from mixed_tsirelson.space import SpaceSpec
from mixed_tsirelson.suites import random_vector
from mixed_tsirelson.theta import Geometric, LogEnclosure, ReciprocalShift, Table, theta_from_json
from mixed_tsirelson.trees import Leaf, Node, evaluate, tree_from_json, tree_to_json, validate
from mixed_tsirelson.vectors import FiniteVector

from oracles import definition_norm, functional_value

SCHREIER = SpaceSpec.schreier()
SCHLUMPRECHT = SpaceSpec.schlumprecht()


E = FiniteVector.unit


def test_norm_examples():
    assert norm(E(5), SCHREIER) == 1
    assert norm(E(5), SCHLUMPRECHT) == 1
    assert norm(E(2) + E(3), SCHREIER) == 1
    assert norm(E(1) + E(2), SCHREIER) == 1
    assert norm(FiniteVector(), SCHREIER) == 0


def test_norm_frozen_values():
    # computed once by the definition-level oracle in oracles.py
    x = E(2) + E(3) + E(4) + E(5)
    assert norm(x, SCHREIER) == definition_norm(x.as_dict(), "S", SCHREIER.weight) == Fraction(3, 2)
    y = E(3) + E(4) + E(5)
    assert norm(y, SCHREIER) == Fraction(3, 2)
    assert norm(E(3, 3) + E(7, -2), SCHREIER) == 3


def test_weighted_norm_examples():
    x = E(2) + E(3)
    assert weighted_norm(x, 1, SCHREIER) == 1
    assert weighted_norm(x, 2, SCHREIER) == Fraction(2, 3)
    assert weighted_norm(E(1), 1, SCHREIER) == Fraction(1, 2)
    with pytest.raises(ValueError):
        weighted_norm(x, 0, SCHREIER)


def test_eval_examples():
    assert evaluate(Leaf(1, 3), E(3), SCHREIER) == 1
    f = Node(1, (Leaf(1, 2), Leaf(1, 3)))
    assert evaluate(f, E(2) + E(3), SCHREIER) == 1
    assert evaluate(f, FiniteVector(), SCHREIER) == 0


def test_validate_examples():
    assert validate(Node(1, (Leaf(1, 2), Leaf(1, 3))), SCHREIER)
    bad = validate(Node(1, (Leaf(1, 1), Leaf(1, 2))), SCHREIER)
    assert not bad and bad.path == ()
    assert validate(Leaf(-1, 7), SCHREIER)
    overlapping = Node(2, (Node(1, (Leaf(1, 3), Leaf(1, 5))), Leaf(1, 4)))
    assert not validate(overlapping, SCHREIER)
    assert not validate(Node(0, (Leaf(1, 3),)), SCHREIER)


def test_tree_json_round_trip():
    f = Node(2, (Node(1, (Leaf(1, 3), Leaf(-1, 4))), Leaf(1, 9)))
    assert tree_from_json(tree_to_json(f)) == f
    with pytest.raises(ValueError):
        tree_from_json({"x": 1})


def test_coordinate_functional_bound_examples():
    x = E(2) + E(3)
    assert coordinate_functional_bound([Leaf(1, 2), Leaf(1, 3)], x, SCHREIER) == norm(E(1) + E(2), SCHREIER)
    assert coordinate_functional_bound([], x, SCHREIER) == 0
    assert coordinate_functional_bound([Leaf(1, 9)], x, SCHREIER) == 0
    with pytest.raises(ValueError):
        coordinate_functional_bound([Leaf(1, 3), Leaf(1, 2)], x, SCHREIER)


def test_g_norm_examples():
    x = E(2) + E(3)
    assert g_norm(x, [Leaf(1, 2), Leaf(1, 3)], FamilyKind("S", 1), SCHREIER) == 2
    assert g_norm(FiniteVector(), [Leaf(1, 2)], FamilyKind("S", 1), SCHREIER) == 0
    f = Node(1, (Leaf(1, 2), Leaf(1, 3)))
    assert g_norm(x, [f], FamilyKind("S", 0), SCHREIER) == 1


def test_brute_force_examples_and_limits():
    assert brute_force_norm(E(2) + E(3), SCHREIER) == 1
    assert brute_force_norm(E(4), SCHREIER) == 1
    assert brute_force_norm(E(4, 2), SCHREIER) == 2
    with pytest.raises(ValueError):
        brute_force_norm(FiniteVector.from_pairs((i, 1) for i in range(1, 12)), SCHREIER)


@pytest.mark.parametrize("space", [SCHREIER, SCHLUMPRECHT, SpaceSpec("S", Geometric(Fraction(2, 3)))])
def test_norm_matches_definition_oracle(space):
    rng = random.Random(f"definition:{space.ladder}:{space.theta.kind}")
    for _ in range(40):
        x = random_vector(rng, max_support=6, span=10)
        want = definition_norm(x.as_dict(), space.ladder, space.weight)
        assert norm(x, space) == want, x


def test_optimizer_tree_attains_norm():
    rng = random.Random(7)
    for space in (SCHREIER, SCHLUMPRECHT):
        for _ in range(40):
            x = random_vector(rng, 8)
            value = norm(x, space)
            f = optimizer_tree(x, space)
            assert validate(f, space)
            assert functional_value(f, x.as_dict(), space.weight) == value
            for j in (1, 2, 3):
                g = weighted_optimizer_tree(x, j, space)
                assert validate(g, space)
                assert isinstance(g, Node) and g.op == j
                assert evaluate(g, x, space) == weighted_norm(x, j, space)


def test_norm_is_max_of_sup_and_weighted_norms():
    rng = random.Random(11)
    for _ in range(60):
        x = random_vector(rng, 8)
        value = norm(x, SCHREIER)
        g = guarded_norm(x, SCHREIER)
        assert g.value == value
        ws = [weighted_norm(x, j, SCHREIER) for j in range(1, g.cutoff + 1)]
        assert value == max([x.sup(), *ws])
        for j, w in enumerate(ws, start=1):
            assert w <= min(value, SCHREIER.weight(j) * x.l1())


def test_guard_raises_cutoff_without_changing_value():
    small = SpaceSpec("S", ReciprocalShift(), weight_cutoff=1)
    x = FiniteVector.from_pairs((i, 1) for i in range(2, 22))
    g = guarded_norm(x, small)
    assert g.raised and g.cutoff == 2
    assert g.value == norm(x, SCHREIER)


def test_norm_bounds_bracket_log_weights():
    x = E(3) + E(4) + E(5) + E(6)
    lo, hi = norm_bounds(x, SCHLUMPRECHT)
    assert lo <= hi and hi - lo < Fraction(1, 10**9)
    assert norm_bounds(x, SCHREIER) == (norm(x, SCHREIER),) * 2


def test_theta_descriptors():
    for theta in (ReciprocalShift(2), Geometric(Fraction(1, 3)), LogEnclosure("upper", 32), Table((Fraction(1, 2), Fraction(1, 3)))):
        again = theta_from_json(theta.to_json())
        assert [again.at(n) for n in range(1, 9)] == [theta.at(n) for n in range(1, 9)]
        assert not theta.decreasing_violations(20)
    lo, hi = LogEnclosure().enclosure(2)
    # log_3 2 = 0.630929753571457437099...
    assert lo <= Fraction("0.63092975357145743710") and hi >= Fraction("0.63092975357145743709")
    assert hi - lo <= Fraction(1, 2**63)
    assert LogEnclosure().enclosure(3) == (Fraction(1, 2), Fraction(1, 2))
    assert not SCHREIER.regularity_violations(10)
    assert not SCHLUMPRECHT.regularity_violations(10)
    assert SpaceSpec.from_json(SCHLUMPRECHT.to_json()).to_json() == SCHLUMPRECHT.to_json()
    with pytest.raises(ValueError):
        Table((Fraction(1, 3), Fraction(1, 2)))
    with pytest.raises(ValueError):
        ReciprocalShift().at(0)


def test_vector_json_and_validation():
    x = FiniteVector.from_json({"coords": [[2, "1/3"], [5, "-2"]]})
    assert FiniteVector.from_json(x.to_json()) == x
    assert x.to_json() == {"coords": [[2, "1/3"], [5, "-2"]]}
    with pytest.raises(ValueError):
        FiniteVector.from_json({"coords": [[5, "1"], [2, "1"]]})
    with pytest.raises(ValueError):
        FiniteVector(((0, Fraction(1)),))
    assert FiniteVector.from_pairs([(3, 0)]) == FiniteVector()
