"""Exact norms, special averages and operator certificates in mixed Tsirelson spaces."""

from .averages import (
    ConstructionError,
    SpecialAverage,
    check_lemma36,
    check_lemma37,
    check_scc,
    estimate_w,
    make_basic_average,
)
from .families import FamilyKind, compose, family_sup, heaviest_member, is_admissible, is_member, schreier_rank
from .norm import brute_force_norm, guarded_norm, norm, norm_bounds, optimizer_tree, weighted_norm
from .operators import OperatorSpec, apply, build_operator, compute_k_r, prop21_bound, singularity_probe
from .reports import Report
from .ris import CoreTree, RisBundle, RisParams, build_ris_bundle, check_lemma410, check_prop43
from .space import SpaceSpec
from .theta import Geometric, LogEnclosure, ReciprocalShift, Table
from .trees import Leaf, Node, evaluate, validate
from .vectors import FiniteVector

__version__ = "0.1.0"

__all__ = [
    "ConstructionError",
    "CoreTree",
    "FamilyKind",
    "FiniteVector",
    "Geometric",
    "Leaf",
    "LogEnclosure",
    "Node",
    "OperatorSpec",
    "ReciprocalShift",
    "Report",
    "RisBundle",
    "RisParams",
    "SpaceSpec",
    "SpecialAverage",
    "Table",
    "apply",
    "brute_force_norm",
    "build_operator",
    "build_ris_bundle",
    "check_lemma36",
    "check_lemma37",
    "check_lemma410",
    "check_prop43",
    "check_scc",
    "compose",
    "compute_k_r",
    "estimate_w",
    "evaluate",
    "family_sup",
    "guarded_norm",
    "heaviest_member",
    "is_admissible",
    "is_member",
    "make_basic_average",
    "norm",
    "norm_bounds",
    "optimizer_tree",
    "prop21_bound",
    "schreier_rank",
    "singularity_probe",
    "validate",
    "weighted_norm",
]
