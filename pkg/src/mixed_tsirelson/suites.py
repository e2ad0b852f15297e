"""Named verification suites run by ``mixed-tsirelson verify``.

Each suite takes a seeded ``random.Random`` and returns a list of reports.
Sizes are kept small enough for the whole set to finish in about a minute.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Callable

from .averages import check_lemma36, check_lemma37, estimate_w, make_basic_average
from .families import FamilyKind, family_sup, is_member
from .norm import brute_force_norm, norm
from .operators import (
    build_operator,
    check_lemma53,
    check_lemma54,
    estimate_rhs,
    geometric_tail,
    noncompactness_witness,
    prop21_bound,
    singularity_probe,
)
from .reports import Report
from .ris import CoreTree, build_ris_bundle, check_lemma410, check_prop43, periodic_instance
from .space import SpaceSpec
from .vectors import FiniteVector

__all__ = ["SUITES", "run_suite", "random_vector", "operator_fixture"]


def random_vector(rng: random.Random, max_support: int = 8, span: int = 14, bound: int = 3) -> FiniteVector:
    size = rng.randint(1, max_support)
    idx = sorted(rng.sample(range(1, span + 1), size))
    coords = []
    for i in idx:
        q = rng.randint(1, 4)
        v = Fraction(rng.randint(-bound * q, bound * q), q)
        coords.append((i, v if v else Fraction(1)))
    return FiniteVector(tuple(coords))


def _exhaustive_sup(weights: dict[int, Fraction], fam: FamilyKind) -> Fraction:
    items = sorted(weights)
    best = Fraction(0)
    for r in range(1, len(items) + 1):
        for sub in itertools.combinations(items, r):
            if is_member(sub, fam):
                best = max(best, sum((weights[i] for i in sub), Fraction(0)))
    return best


def families_suite(rng: random.Random, cases: int = 60) -> list[Report]:
    rep = Report("family_sup equals exhaustive enumeration")
    for _ in range(cases):
        x = random_vector(rng, 7).abs()
        w = x.as_dict()
        for fam in (FamilyKind("S", 1), FamilyKind("S", 2), FamilyKind("A", 3)):
            got, want = family_sup(w, fam), _exhaustive_sup(w, fam)
            if got != want:
                rep.add(False, family=str(fam), vector=x, got=got, want=want)
    rep.add(True, cases=cases)
    return [rep]


def norms_suite(rng: random.Random, cases: int = 40) -> list[Report]:
    out = []
    for space in (SpaceSpec.schreier(), SpaceSpec.schlumprecht()):
        rep = Report(f"norm equals brute force on ladder {space.ladder}")
        for _ in range(cases):
            x = random_vector(rng, 7)
            got, want = norm(x, space), brute_force_norm(x, space)
            if got != want:
                rep.add(False, vector=x, got=got, want=want)
        rep.add(True, cases=cases)
        out.append(rep)
    return out


AVERAGE_GRID = [(n, Fraction(1, d), s) for n in (1, 2) for d in (2, 4) for s in (3, 5, 10)]


def lemma36_suite(rng: random.Random) -> list[Report]:
    space = SpaceSpec.schreier()
    return [check_lemma36(make_basic_average(n, e, s), space) for n, e, s in AVERAGE_GRID]


def lemma37_suite(rng: random.Random) -> list[Report]:
    space = SpaceSpec.schreier()
    out = []
    for k in (1, 2):
        for d in (2, 4):
            eps = Fraction(1, d)
            w = estimate_w(1, k, space, average_eps=eps)
            rep = Report(f"lemma37 at eps=1, k={k}, averages with eps={eps}, w={w}")
            for n in (1, 2):
                if n < w:
                    continue
                for s in (3, 5, 10):
                    sub = check_lemma37(make_basic_average(n, eps, s), k, 1, space)
                    rep.add(bool(sub), rank=n, start=s)
            if not rep.witnesses:
                rep.witnesses.append({"note": f"no sampled rank at or above w={w}"})
            out.append(rep)
    return out


def prop43_suite(rng: random.Random) -> list[Report]:
    space = SpaceSpec.schreier()
    out = []
    for M in (2, 3):
        for N in (1, 2):
            inst = periodic_instance(1, [1] * M, N, Fraction(2, 3), Fraction(1, 2), Fraction(1, 2), space)
            norms = [norm(b, space) for b in inst.blocks]
            out.append(check_prop43(inst.x, inst.params, inst.coefficients.vector.values(), space, norms))
    return out


def lemma410_suite(rng: random.Random) -> list[Report]:
    space = SpaceSpec.schreier()
    core = CoreTree.regular([(1, 2), (1, 2)])
    canonical = build_ris_bundle(core, 2, 1, space)
    relaxed = build_ris_bundle(core, 2, 1, space, eps_basic="1/2", eps_periodic="1/2", eps_tilde="1/2")
    return [check_lemma410(canonical, space), check_lemma410(relaxed, space)]


def operator_fixture(space: SpaceSpec | None = None):
    """Three bundles of heights 1, 2, 2 on an all-ones core with the R3 and R4 growth checks exact at ``c = 1/100``."""
    space = space or SpaceSpec.schreier()
    core = CoreTree.regular([(1, 2), (1, 2), (1, 2)])
    return build_operator(core, [6, 24, 72, 160], [1, 2, 2], space, Fraction(1, 100))


def lemma53_suite(rng: random.Random) -> list[Report]:
    T, _ = operator_fixture()
    b1, b2 = T.bundles[1], T.bundles[2]
    out = []
    for beta in ((1,), (2,)):
        out.append(check_lemma53({2: b1}, beta, 0, Fraction(1, 2)))
        out.append(check_lemma53({2: b1, 3: b2}, beta, 1, Fraction(1, 2)))
    return out


def lemma54_suite(rng: random.Random) -> list[Report]:
    T, _ = operator_fixture()
    return [check_lemma54({2: T.bundles[1], 3: T.bundles[2]}, 1, 1, Fraction(1, 2))]


def operator_suite(rng: random.Random) -> list[Report]:
    T, rep = operator_fixture()
    _, witness = noncompactness_witness(T)
    eps = [Fraction(1, 4**j) for j in range(1, 11)]
    bound = prop21_bound(eps, [2**j for j in range(1, 11)], 10, geometric_tail(1, Fraction(1, 4), 1, 2))
    b = Report("prop21 bound on eps_j = 4^-j, N_j = 2^j")
    b.add(bound.certified and bound.value == Fraction(40, 9), value=bound.value, partial=bound.partial)
    kernel = FiniteVector.unit(T.bundles[-1].x.maxsupp + 3)
    probe = singularity_probe(T, [kernel], 1, 20)
    k = Report("kernel probe")
    k.add(probe.witnesses[0]["g_norm"] == 0 and probe.witnesses[0]["image_norm"] == 0)
    rhs = [estimate_rhs(T.core, j0, T.c) for j0 in (1, 2, 3)]
    d = Report("estimate decreases in j0")
    d.add(rhs[0] > rhs[1] > rhs[2], values=rhs)
    return [rep, witness, b, k, d]


SUITES: dict[str, Callable[[random.Random], list[Report]]] = {
    "families": families_suite,
    "norms": norms_suite,
    "lemma36": lemma36_suite,
    "lemma37": lemma37_suite,
    "prop43": prop43_suite,
    "lemma410": lemma410_suite,
    "lemma53": lemma53_suite,
    "lemma54": lemma54_suite,
    "operator": operator_suite,
}


def run_suite(name: str, seed: int = 0) -> list[Report]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](random.Random(f"{name}:{seed}"))
