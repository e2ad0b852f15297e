import itertools
from fractions import Fraction

import pytest

from mixed_tsirelson.families import FamilyKind
from mixed_tsirelson.norm import coordinate_functional_bound, norm
from mixed_tsirelson.operators import (
    OperatorSpec,
    RatioError,
    apply,
    build_operator,
    check_fact510,
    check_lemma53,
    check_lemma54,
    compute_k_r,
    compute_k_r_multiplicative,
    estimate_rhs,
    geometric_tail,
    noncompactness_witness,
    prop21_bound,
    singularity_probe,
)
from mixed_tsirelson.ris import CoreTree
from mixed_tsirelson.space import SpaceSpec
from mixed_tsirelson.suites import operator_fixture
from mixed_tsirelson.theta import Geometric, LogEnclosure, ReciprocalShift
from mixed_tsirelson.trees import Leaf, Node, evaluate, validate
from mixed_tsirelson.vectors import FiniteVector

SCHREIER = SpaceSpec.schreier()
HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def fixture():
    return operator_fixture(SCHREIER)


@pytest.fixture(scope="module")
def T(fixture):
    return fixture[0]


# -- ratio thresholds ---------------------------------------------------------


def test_k_r_for_reciprocal_weights():
    theta = ReciprocalShift()
    assert [compute_k_r(theta, HALF, r) for r in range(6)] == [1, 1, 2, 3, 4, 5]
    for c in (Fraction(1, 10), HALF, Fraction(9, 10)):
        assert compute_k_r(theta, c, 0) == 1


def test_k_r_satisfies_its_definition():
    theta = ReciprocalShift()
    for c in (Fraction(1, 3), HALF, Fraction(3, 4)):
        table = [compute_k_r(theta, c, r) for r in range(8)]
        assert table == sorted(table)
        for r, k in enumerate(table):
            assert all(theta.at(r + kk) / theta.at(kk) > c for kk in range(k, k + 200))
            if k > 1:
                assert theta.at(r + k - 1) / theta.at(k - 1) <= c


def test_k_r_for_geometric_weights():
    ratio = Fraction(2, 3)
    theta = Geometric(ratio)
    assert compute_k_r(theta, ratio / 2, 1) == 1
    with pytest.raises(RatioError) as exc:
        compute_k_r(theta, ratio / 2, 5)
    assert exc.value.witness == 1
    with pytest.raises(ValueError):
        compute_k_r(theta, 1, 1)


def test_multiplicative_k_r():
    log = LogEnclosure()
    k = compute_k_r_multiplicative(log, HALF, 2)
    assert k >= 1
    lo, _ = log.enclosure(2 * k)
    _, hi = log.enclosure(k)
    assert lo > HALF * hi
    with pytest.raises(RatioError):
        compute_k_r_multiplicative(Geometric(HALF), HALF, 2)


def test_fact510_windows():
    log = check_fact510(LogEnclosure(), 2, 1 << 12)
    assert log and any(p.empirical for p in log.premises)
    assert check_fact510(LogEnclosure(), 1, 1 << 6)
    assert not check_fact510(Geometric(HALF), 2, 1 << 6)


# -- operator construction ----------------------------------------------------


def test_fixture_invariants(fixture):
    T, rep = fixture
    assert rep
    conds = {w["condition"] for w in rep.witnesses}
    assert {"R3", "R4"} <= conds
    assert T.targets == T.r[1:]
    assert all(validate(g, T.space) for g in T.functionals)
    assert all(a < b for a, b in zip(T.targets, T.targets[1:]))
    for j, rj in enumerate(T.r[:3], start=1):
        prior = T.core.enumeration[:j]
        mass = sum(T.core.M(mu) + T.core.m[mu] for mu in prior)
        assert SCHREIER.weight(rj) * mass < Fraction(1, 2**j)


def test_build_operator_rejects_bad_parameters():
    core = CoreTree.regular([(1, 2), (1, 2)])
    with pytest.raises(ValueError):
        build_operator(core, [6, 24], [1], SCHREIER, HALF)
    with pytest.raises(ValueError):
        build_operator(core, [6, 4], [1], SCHREIER, Fraction(1, 100))
    with pytest.raises(ValueError):
        build_operator(core, [6], [1], SCHREIER, Fraction(1, 100))
    T, rep = build_operator(core, [6, 24], [1], SCHREIER, HALF, relaxed=True)
    assert T.relaxed and not rep.premises_hold


def test_empty_operator_is_zero():
    T, _ = build_operator(CoreTree({(): 1}), [], [], SCHREIER)
    assert T.functionals == [] and apply(T, FiniteVector.unit(4)) == FiniteVector()


def test_two_bundle_operator():
    core = CoreTree.regular([(1, 2), (1, 2)])
    T, rep = build_operator(core, [6, 24, 72], [1, 2], SCHREIER, Fraction(1, 100))
    assert len(T.functionals) == 2 and T.targets == [24, 72]


def test_operator_spec_validation():
    with pytest.raises(ValueError):
        OperatorSpec([Leaf(1, 2), Leaf(1, 3)], [5, 4], SCHREIER)
    with pytest.raises(ValueError):
        OperatorSpec([Leaf(1, 3), Leaf(1, 2)], [4, 5], SCHREIER)
    with pytest.raises(ValueError):
        OperatorSpec([Node(1, (Leaf(1, 1), Leaf(1, 2)))], [4], SCHREIER)


def test_operator_json_round_trip(T):
    again = OperatorSpec.from_json(T.to_json())
    assert again.to_json() == T.to_json()
    x = T.bundles[1].x
    assert apply(again, x) == apply(T, x)


def test_apply_examples(T):
    far = FiniteVector.unit(T.bundles[-1].x.maxsupp + 5)
    assert apply(T, far) == FiniteVector()
    for n, b in enumerate(T.bundles):
        image = apply(T, b.x)
        assert image[T.targets[n]] == 1
        for m, g in enumerate(T.functionals):
            assert image[T.targets[m]] == evaluate(g, b.x, SCHREIER)
    x, y = T.bundles[0].x, T.bundles[1].x.scale(Fraction(-2, 3))
    assert apply(T, x + y) == apply(T, x) + apply(T, y)
    assert set(apply(T, x + y).support) <= set(T.targets)


def test_image_is_dominated_by_the_norm(T):
    for b in T.bundles:
        image = apply(T, b.x)
        assert image.sup() <= norm(b.x, SCHREIER)
        assert coordinate_functional_bound(T.functionals, b.x, SCHREIER) <= norm(b.x, SCHREIER)


# -- boundedness estimate -----------------------------------------------------


def test_prop21_examples():
    eps = [Fraction(1, 4**j) for j in range(1, 11)]
    N = [2**j for j in range(1, 11)]
    bound = prop21_bound(eps, N, 10, geometric_tail(1, Fraction(1, 4), 1, 2))
    partial = sum(Fraction(j, 4**j) + 4 * Fraction(2**j, 4**j) for j in range(1, 11))
    assert bound.partial == partial
    assert bound.certified and bound.value == Fraction(40, 9)
    assert bound.value <= Fraction(4, 9) + 4 + bound.tail
    assert prop21_bound([0, 0, 0], [1, 2, 3], 3, 0).value == 0
    assert prop21_bound([Fraction(1, 8)], [2], 1).value == Fraction(9, 8)
    uncertified = prop21_bound(eps, N, 10)
    assert not uncertified.certified and uncertified.value == partial
    with pytest.raises(ValueError):
        geometric_tail(1, 2, 1, 1)


def test_geometric_tail_matches_long_partial_sums():
    tail = geometric_tail(1, Fraction(1, 4), 1, 2)
    J = 10
    longer = sum(Fraction(j, 4**j) + 4 * Fraction(2**j, 4**j) for j in range(J + 1, 200))
    assert longer < tail(J) < longer + Fraction(1, 10**50)


# -- sums of functionals ------------------------------------------------------


def test_lemma53_root_and_level_one(T):
    b1, b2 = T.bundles[1], T.bundles[2]
    root = check_lemma53({1: b1}, (), 0, HALF)
    assert root and next(w for w in root.witnesses if w["check"] == "ratio")["ratio"] == 1
    single = check_lemma53({2: b1}, (1,), 0, HALF)
    assert single and single.premises_hold
    pair = check_lemma53({2: b1, 3: b2}, (1,), 1, HALF)
    ratio = next(w for w in pair.witnesses if w["check"] == "ratio")["ratio"]
    m, o = T.core.m[(1,)], T.core.ord((1,))
    assert ratio == Fraction(m + o + 1 + 1, m + 1) <= 2
    assert pair


def test_lemma53_reports_hypothesis_failures(T):
    b1, b2 = T.bundles[1], T.bundles[2]
    rep = check_lemma53({1: b1, 2: b2}, (1,), 1, HALF)
    names = {p.name: p.holds for p in rep.premises}
    assert names["F in S_r"] is False and names["F > |beta|"] is False
    with pytest.raises(ValueError):
        check_lemma53({2: T.bundles[0]}, (1,), 0, HALF)


def test_lemma54(T):
    b1, b2 = T.bundles[1], T.bundles[2]
    rep = check_lemma54({2: b1, 3: b2}, 1, 1, HALF)
    assert rep
    total = next(w for w in rep.witnesses if w.get("check") == "total")
    assert total["bound"] == T.core.n(1) / HALF
    empty = check_lemma54({2: b1}, 0, 0, HALF)
    assert empty and next(w for w in empty.witnesses if w.get("check") == "total")["total"] == 0


def test_lemma54_reports_label_premise(T):
    rep = check_lemma54({1: T.bundles[1]}, 1, 0, HALF)
    names = {p.name: p.holds for p in rep.premises}
    assert names["F > |mu_j|"] is False
    assert all(w["premises"] is False for w in rep.witnesses if "beta" in w)


# -- witnesses ------------------------------------------------------------------


def test_noncompactness(T, fixture):
    delta, rep = noncompactness_witness(T)
    assert rep.premises_hold and delta >= Fraction(1, 3)
    with pytest.raises(ValueError):
        noncompactness_witness(T, [T.bundles[0]])
    with pytest.raises(ValueError):
        noncompactness_witness(T, [T.bundles[0], T.bundles[0]])


def test_estimate_rhs_decreases(T):
    values = [estimate_rhs(T.core, j0, T.c) for j0 in (1, 2, 3)]
    assert values[0] > values[1] > values[2]
    c = T.c
    assert values[0] == 1 + 8 / c + 1 / (c * Fraction(1, 2))


def test_kernel_probe(T):
    kernel = FiniteVector.unit(T.bundles[-1].x.maxsupp + 3)
    rep = singularity_probe(T, [kernel], 1, 20)
    best = rep.witnesses[0]
    assert (best["g_norm"], best["image_norm"]) == (0, 0)
    assert rep


def test_probe_on_bundle_pieces(T):
    pieces = [T.bundles[0].x, FiniteVector.unit(T.bundles[0].x.maxsupp + 1)]
    rep = singularity_probe(T, pieces, 2, 12)
    best = rep.witnesses[0]
    assert best["evaluations"] <= 12
    assert best["image_norm"] <= 1
    with pytest.raises(ValueError):
        singularity_probe(T, pieces[::-1], 1)
    with pytest.raises(ValueError):
        singularity_probe(T, pieces, 9)


def test_g_norm_over_functionals(T):
    from mixed_tsirelson.norm import g_norm

    x = T.bundles[1].x
    fam = FamilyKind("S", T.r[1])
    values = [abs(evaluate(g, x, SCHREIER)) for g in T.functionals]
    assert g_norm(x, T.functionals, fam, SCHREIER) <= sum(values)
    for sub in itertools.combinations(range(len(values)), 1):
        assert g_norm(x, T.functionals, fam, SCHREIER) >= values[sub[0]]
