from fractions import Fraction

import pytest

from mixed_tsirelson.averages import ConstructionError, SpecialAverage, make_basic_average
from mixed_tsirelson.families import FamilyKind, is_admissible, is_member
from mixed_tsirelson.norm import norm
from mixed_tsirelson.ris import (
    CoreTree,
    RisBundle,
    RisParams,
    build_ris_bundle,
    bundle_invariants,
    bundle_p_reports,
    check_lemma410,
    check_p_conditions,
    check_prop43,
    check_r_conditions,
    greedy_q_ladder,
    is_skipped,
    make_periodic_average,
    node_bound,
    node_params,
    periodic_instance,
    skipped_sum_check,
)
from mixed_tsirelson.space import SpaceSpec
from mixed_tsirelson.trees import Leaf, Node, evaluate, support_of, validate
from mixed_tsirelson.vectors import FiniteVector

SCHREIER = SpaceSpec.schreier()
HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def core2():
    return CoreTree.regular([(1, 2), (1, 2)])


@pytest.fixture(scope="module")
def canonical_bundle(core2):
    return build_ris_bundle(core2, 2, 1, SCHREIER)


@pytest.fixture(scope="module")
def relaxed_bundle(core2):
    return build_ris_bundle(core2, 2, 1, SCHREIER, eps_basic="1/2", eps_periodic="1/2", eps_tilde="1/2")


# -- core trees ---------------------------------------------------------------


def test_core_tree_enumeration_and_derived_quantities():
    core = CoreTree({(): 2, (1,): 3, (2,): 4, (1, 1): 5, (1, 2): 6, (2, 1): 7})
    assert core.enumeration == ((), (1,), (2,), (1, 1), (1, 2), (2, 1))
    assert core.M(()) == 2 and core.M((1,)) == 2 and core.M((2, 1)) == 0
    assert core.ord(()) == 0 and core.ord((1,)) == 2 and core.ord((1, 2)) == 5
    assert core.c((), SCHREIER) == 1
    assert core.c((2, 1), SCHREIER) == Fraction(1, 3) * Fraction(1, 5)
    assert core.c((1,), SCHREIER) > core.c((1, 1), SCHREIER)
    assert core.I(1) == [(2,)]
    assert core.I(2) == [(1, 1), (1, 2)]
    assert core.n(2) == 2
    assert core.I(0) == []
    with pytest.raises(ValueError):
        core.I(3)
    assert core.level_weights(1) == {3, 4}


def test_core_tree_rejects_malformed_input():
    with pytest.raises(ValueError):
        CoreTree({(1,): 1})
    with pytest.raises(ValueError):
        CoreTree({(): 1, (1, 1): 1})
    with pytest.raises(ValueError):
        CoreTree({(): 1, (2,): 1})
    with pytest.raises(ValueError):
        CoreTree({(): 0})


def test_core_tree_json_round_trip():
    core = CoreTree.regular([(1, 3), (2, 2), (3, 1)])
    data = core.to_json()
    assert data["m"] == 1 and len(data["children"]) == 3
    assert CoreTree.from_json(data) == core


# -- periodic averages --------------------------------------------------------


def test_greedy_q_ladder_satisfies_spacing():
    ns = (1, 20, 500)
    q = greedy_q_ladder(ns, HALF, SCHREIER)
    # theta_q = 1/(q+1): q_1 = 16 - 1, q_{i+1} = (n_i + 1)^2 - 1
    assert q == (0, 15, 440, 251000)
    th = SCHREIER.weight
    assert q[0] < ns[0] < q[1] < ns[1] < q[2] < ns[2] < q[3]
    assert th(q[1]) <= HALF * th(ns[0]) ** 2 / 2
    for i in range(len(ns)):
        assert th(q[i + 1]) <= th(ns[i]) ** 2
    assert greedy_q_ladder(ns, HALF, SCHREIER, 4, 9)[:2] == (4, 9)


def test_ris_params_validation_and_json():
    p = RisParams(1, HALF, HALF, 2, 3, (1, 2, 3), (0, 2, 4, 6))
    assert RisParams.from_json(p.to_json()) == p
    with pytest.raises(ValueError):
        RisParams(1, HALF, HALF, 2, 1, (1, 2, 3), (0, 2, 4))
    with pytest.raises(ValueError):
        RisParams(2, HALF, HALF, 1, 1, (1, 2), (0, 2, 4))


def _log_block(rank):
    space = SpaceSpec.schlumprecht()
    avg = make_basic_average(rank, HALF, 3, "A")
    return avg.vector.scale(1 / space.weight(rank)), space


def test_p_conditions_pass_on_spaced_averages():
    x, space = _log_block(8)
    params = RisParams(1, HALF, 1, 1, 1, (1, 8), greedy_q_ladder((1, 8), Fraction(1), space))
    rep = check_p_conditions([x], params, norm(x, space), space)
    assert rep, rep.failures()
    assert all(p.holds for p in rep.premises)
    assert {w["condition"] for w in rep.witnesses} == {"P2", "P3"}


def test_p_conditions_flag_a_unit_vector():
    # a unit vector scaled as if it were a rank-2 average
    x = FiniteVector.unit(7, 1 / SCHREIER.weight(2))
    params = RisParams(1, HALF, HALF, 1, 1, (1, 2), (0, 2, 4))
    rep = check_p_conditions([x], params, 1, SCHREIER)
    bad = rep.failures()
    assert not rep and bad
    assert bad[0]["condition"] == "P2" and bad[0]["j"] == 1


def test_p_conditions_input_checks():
    params = RisParams(1, HALF, HALF, 1, 2, (1, 2), (0, 2, 4))
    with pytest.raises(ValueError):
        check_p_conditions([FiniteVector.unit(3)], params, 1, SCHREIER)
    with pytest.raises(ValueError):
        check_p_conditions([FiniteVector.unit(5), FiniteVector.unit(3)], params, 1, SCHREIER)


def test_periodic_average_single_term():
    x = make_basic_average(1, HALF, 3).vector.scale(2)
    coeff = SpecialAverage(FiniteVector.unit(x.maxsupp), 0, HALF)
    assert make_periodic_average([x], RisParams(1, HALF, HALF, 1, 1, (1, 1), (0, 2, 3)), coeff) == x


def test_periodic_average_of_three_blocks():
    blocks, pos = [], 3
    for _ in range(3):
        avg = make_basic_average(1, HALF, pos)
        blocks.append(avg.vector)
        pos = avg.vector.maxsupp + 1
    coeff = SpecialAverage(FiniteVector.from_pairs((b.maxsupp, Fraction(1, 3)) for b in blocks), 1, HALF)
    x = make_periodic_average(blocks, None, coeff)
    assert x.total() == 1
    assert set(x.support) == set().union(*(b.support for b in blocks))
    shifted = SpecialAverage(FiniteVector.from_pairs((b.minsupp, Fraction(1, 3)) for b in blocks), 1, HALF)
    with pytest.raises(ValueError):
        make_periodic_average(blocks, None, shifted)
    with pytest.raises(ValueError):
        make_periodic_average(blocks[::-1], None, coeff)


# -- bundles ------------------------------------------------------------------


def test_height_one_bundle_is_a_basic_average(core2):
    b = build_ris_bundle(core2, 1, 3, SCHREIER)
    assert set(b.nodes) == {()} | {(i,) for i in range(1, len(b.x) + 1)}
    m = core2.m[()]
    assert b.x.scale(SCHREIER.weight(m)).total() == 1
    assert isinstance(b.f, Node) and b.f.op == m
    assert all(isinstance(c, Leaf) for c in b.f.children)
    assert evaluate(b.f, b.x, SCHREIER) == 1


@pytest.mark.parametrize("which", ["canonical_bundle", "relaxed_bundle"])
def test_height_two_bundle_invariants(which, request):
    b = request.getfixturevalue(which)
    assert bundle_invariants(b) == []
    assert evaluate(b.f, b.x, SCHREIER) == 1
    assert validate(b.f, SCHREIER)
    assert set(support_of(b.f)) <= set(b.x.support)
    assert is_member(b.x.support, FamilyKind("S", b.p_n))
    for mu in b.core.m:
        family = b.with_core(mu)
        if family and b.core.ord(mu):
            assert is_admissible([n.vector.support for n in family], FamilyKind("S", b.core.ord(mu)))
    for path, core_path in b.v():
        if path:
            parent = b.nodes[path[:-1]].core
            M = b.core.M(parent)
            assert core_path == parent + ((path[-1] - 1) % M + 1,)
    assert b.relaxed == (which == "relaxed_bundle")


def test_bundle_json_round_trip(relaxed_bundle):
    data = relaxed_bundle.to_json()
    assert {"vector", "functional", "v", "height"} <= set(data)
    again = RisBundle.from_json(data)
    assert again.to_json() == data
    assert again.x == relaxed_bundle.x and again.f == relaxed_bundle.f


def test_bundle_rejects_shallow_core(core2):
    with pytest.raises(ValueError):
        build_ris_bundle(core2, 4, 1, SCHREIER)
    with pytest.raises(ValueError):
        build_ris_bundle(core2, 0, 1, SCHREIER)


def test_node_params_chain_q_ladders(canonical_bundle):
    root = node_params(canonical_bundle, ())
    assert root.n0 == canonical_bundle.core.m[()]
    assert root.N * root.M == len(canonical_bundle.nodes[()].children)
    with pytest.raises(ValueError):
        node_params(canonical_bundle, (1,))
    reports = bundle_p_reports(canonical_bundle)
    assert set(reports) == {()}


# -- checkers -----------------------------------------------------------------


def test_prop43_degenerate_vector():
    params = RisParams(1, HALF, HALF, 1, 1, (1, 2), (0, 2, 4))
    x = FiniteVector.unit(5, SCHREIER.weight(1))
    rep = check_prop43(x, params, [Fraction(1)], SCHREIER)
    assert rep.witnesses[0]["conclusion"] == "norm" and rep.witnesses[0]["lhs"] == 1
    assert rep.witnesses[0]["holds"]


def test_prop43_premise_reported_separately():
    inst = periodic_instance(1, [1, 1], 1, Fraction(2, 3), HALF, HALF, SCHREIER)
    norms = [norm(b, SCHREIER) for b in inst.blocks]
    rep = check_prop43(inst.x, inst.params, inst.coefficients.vector.values(), SCHREIER, norms)
    cond = next(p for p in rep.premises if p.name == "coefficient condition")
    sup_a = max(inst.coefficients.vector.values())
    t0 = SCHREIER.weight(1)
    assert cond.holds == (4 * (HALF + sup_a) <= (1 - t0) * t0**3) is False
    assert rep.verdict == "pass"
    uncond = next(w for w in rep.witnesses if w["conclusion"] == "unconditional")
    eps1 = (1 + inst.params.eps_tilde) * SCHREIER.weight(inst.params.n[1])
    eps2 = 2 * (HALF + sup_a) / (1 - t0)
    assert uncond["eps1"] == eps1 and uncond["eps2"] == eps2
    assert uncond["lhs"] == norm(inst.x.scale(1 / t0), SCHREIER)


def test_lemma410_on_bundles(canonical_bundle, relaxed_bundle):
    for b in (canonical_bundle, relaxed_bundle):
        rep = check_lemma410(b, SCHREIER)
        assert rep
        lower = next(w for w in rep.witnesses if w["check"] == "functional lower bound")
        assert lower["value"] == 1 / norm(b.x, SCHREIER)
    assert check_lemma410(canonical_bundle).premises_hold
    assert not check_lemma410(relaxed_bundle).premises_hold


def test_node_bound_is_the_level_product(canonical_bundle):
    th = SCHREIER.weight
    assert node_bound(canonical_bundle, ()) == (1 + 3 * th(1)) ** 3
    assert node_bound(canonical_bundle, (1,)) == (1 + 3 * th(1)) ** 2
    assert node_bound(canonical_bundle, (1, 1)) == 1


def test_r_conditions_examples():
    big = CoreTree({(): 4, (1,): 8})
    rep = check_r_conditions(big, space=SCHREIER)
    r1 = [w for w in rep.witnesses if w["condition"] == "R1"]
    assert all(w["holds"] for w in r1)
    thin = CoreTree({(): 1, (1,): 1})
    r2 = [w for w in check_r_conditions(thin, space=SCHREIER).witnesses if w["condition"] == "R2"]
    assert r2[0]["holds"] is False
    rep = check_r_conditions(big, space=SCHREIER, w=lambda eps, q: 1)
    r0 = [w for w in rep.witnesses if w["condition"] == "R0"]
    assert r0 and all(w["empirical"] for w in r0)
    log = check_r_conditions(big, space=SpaceSpec.schlumprecht())
    assert any(w["condition"] == "R2" and w["holds"] is False for w in log.witnesses)


def test_skipped_sets():
    assert is_skipped([1, 4, 7], 3)
    assert not is_skipped([1, 3], 3)
    a = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 8)]
    total, bound = skipped_sum_check(a, [1, 3], 2)
    assert total == Fraction(5, 8) and bound == 1
    with pytest.raises(ValueError):
        skipped_sum_check(a, [1, 2], 2)
    with pytest.raises(ValueError):
        skipped_sum_check([Fraction(1, 4), Fraction(3, 4)], [1], 1)


def test_construction_error_is_raised_for_impossible_tolerances(core2):
    with pytest.raises((ConstructionError, ValueError)):
        build_ris_bundle(core2, 2, 1, SCHREIER, eps_basic="1/1000")
