"""Command-line front end: ``mixed-tsirelson <command> [options]``.

Every command prints one JSON document (or CSV rows with ``--format csv``)
that embeds the resolved configuration. Exit status is 0 on success, 1 when
a verification fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .averages import ConstructionError, SpecialAverage, check_lemma36, check_scc, make_basic_average
from .families import FamilyKind, heaviest_member, is_member, schreier_rank
from .norm import norm, optimizer_tree, weighted_norm, weighted_optimizer_tree
from .operators import OperatorSpec, apply, build_operator, noncompactness_witness, singularity_probe
from .reports import jsonable
from .ris import CoreTree, build_ris_bundle, check_lemma410
from .space import SpaceSpec
from .suites import SUITES, run_suite
from .trees import tree_to_json
from .vectors import FiniteVector, parse_rational

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# -- input helpers ------------------------------------------------------------


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _artifact(path: str, key: str) -> Any:
    """Load ``key`` from a file written by this tool, or the file itself if it is a bare artifact."""
    data = _load_json(path)
    if isinstance(data, dict) and "result" in data:
        data = data["result"]
    if isinstance(data, dict) and key in data:
        data = data[key]
    return data


def _vector(text: str) -> FiniteVector:
    """A vector file, or inline ``"i:v,i:v"`` such as ``"2:1,3:1"``; ``"0"`` is the zero vector."""
    if Path(text).is_file():
        data = _artifact(text, "vector")
        if isinstance(data, dict) and "coords" not in data:
            data = next((v for v in data.values() if isinstance(v, dict) and "coords" in v), data)
        return FiniteVector.from_json(data)
    if text.strip() in ("0", ""):
        return FiniteVector()
    try:
        pairs = []
        for part in text.split(","):
            i, v = part.split(":")
            pairs.append((int(i), parse_rational(v)))
        return FiniteVector(tuple(pairs))
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse vector {text!r}: {exc}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers, got {text!r}") from exc


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"expected a rational like 1/2, got {text!r}") from exc


def _core(args: argparse.Namespace) -> CoreTree:
    if args.core:
        return CoreTree.from_json(_load_json(args.core))
    levels = []
    for part in args.levels.split(","):
        m, _, b = part.partition("x")
        levels.append((int(m), int(b or 1)))
    return CoreTree.regular(levels)


def _space(args: argparse.Namespace) -> SpaceSpec:
    if args.space:
        return SpaceSpec.from_json(_load_json(args.space))
    return SpaceSpec()


# -- commands -------------------------------------------------------------------


def cmd_norm(args, space):
    x = _vector(args.vector)
    out = {"norm": norm(x, space)}
    if args.tree and x:
        out["tree"] = tree_to_json(optimizer_tree(x, space))
    return out, True


def cmd_weighted_norm(args, space):
    x = _vector(args.vector)
    out = {"j": args.j, "weighted_norm": weighted_norm(x, args.j, space)}
    if args.tree and x:
        out["tree"] = tree_to_json(weighted_optimizer_tree(x, args.j, space))
    return out, True


def cmd_family(args, space):
    F = _int_list(args.set)
    fam = FamilyKind(args.ladder or space.ladder, args.rank)
    out = {"set": F, "family": str(fam), "member": is_member(F, fam)}
    if fam.ladder == "S":
        out["schreier_rank"] = schreier_rank(F)
    return out, True


def cmd_sup(args, space):
    x = _vector(args.vector)
    fam = FamilyKind(args.ladder or space.ladder, args.rank)
    value, member = heaviest_member(x.abs().as_dict(), fam)
    return {"family": str(fam), "sup": value, "member": list(member)}, True


def cmd_scc(args, space):
    if args.check:
        avg = SpecialAverage.from_json(_artifact(args.check, "average"))
    else:
        avg = make_basic_average(args.rank, _rational(args.eps), args.start, space.ladder)
    ok = check_scc(avg)
    out = {"average": avg.to_json(), "valid": ok}
    if args.lemma36:
        rep = check_lemma36(avg, space)
        out["lemma36"] = rep.to_json()
        ok = ok and bool(rep)
    return out, ok


def _tolerances(args) -> dict:
    return {
        "eps_basic": args.eps_basic,
        "eps_periodic": args.eps_periodic,
        "eps_tilde": args.eps_tilde,
    }


def cmd_bundle(args, space):
    tol = _tolerances(args)
    if args.relaxed:
        tol = {k: v or "1/2" for k, v in tol.items()}
    b = build_ris_bundle(_core(args), args.height, args.start, space, **tol)
    out = {"bundle": b.to_json()}
    ok = True
    if args.check:
        rep = check_lemma410(b, space)
        out["lemma410"] = rep.to_json()
        ok = bool(rep)
    return out, ok


def cmd_operator(args, space):
    tol = _tolerances(args)
    if args.relaxed:
        tol = {k: v or "1/2" for k, v in tol.items()}
    r, heights = _int_list(args.r), _int_list(args.heights)
    T, rep = build_operator(_core(args), r, heights, space, _rational(args.c), args.start, args.relaxed, **tol)
    out = {"operator": T.to_json(), "conditions": rep.to_json()}
    ok = bool(rep)
    if len(T.bundles) >= 2:
        delta, wit = noncompactness_witness(T)
        out["noncompactness"] = wit.to_json()
        ok = ok and bool(wit)
    return out, ok


def cmd_apply(args, space):
    T = OperatorSpec.from_json(_artifact(args.operator, "operator"))
    return {"image": apply(T, _vector(args.vector)).to_json()}, True


def cmd_probe(args, space):
    T = OperatorSpec.from_json(_artifact(args.operator, "operator"))
    probes = [FiniteVector.from_json(p) for p in _load_json(args.probes)]
    budget = max(1, args.budget_ms // 50) if args.budget_ms else 200
    rep = singularity_probe(T, probes, args.j0, budget)
    return {"report": rep.to_json()}, bool(rep)


def _suite_rows(name: str, seed: int) -> tuple[str, list[dict]]:
    return name, [r.to_json() for r in run_suite(name, seed)]


def cmd_verify(args, space):
    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InputError(f"unknown suites {unknown}; choose from {', '.join(SUITES)}")
    deadline = time.monotonic() + args.budget_ms / 1000 if args.budget_ms else None
    results: dict[str, list[dict]] = {}
    skipped = []
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            for name, reps in pool.map(_suite_rows, names, [args.seed] * len(names)):
                results[name] = reps
    else:
        for name in names:
            if deadline is not None and time.monotonic() > deadline:
                skipped.append(name)
                continue
            results[name] = _suite_rows(name, args.seed)[1]
    table = []
    for name in names:
        for rep in results.get(name, []):
            table.append({"suite": name, "claim": rep["claim"], "verdict": rep["verdict"], "report": rep})
    for name in skipped:
        table.append({"suite": name, "claim": "skipped: time budget", "verdict": "undecided", "report": None})
    ok = all(row["verdict"] == "pass" for row in table)
    return {"suites": table}, ok


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space descriptor JSON (ladder, theta, weight_cutoff)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget-ms", type=int, default=0, help="time budget; 0 means unlimited")
    common.add_argument("--relaxed", action="store_true", help="allow user tolerances instead of the canonical ones")

    parser = argparse.ArgumentParser(prog="mixed-tsirelson", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="exact norm of a vector")
    p.add_argument("vector")
    p.add_argument("--tree", action="store_true", help="also emit an optimal norming tree")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("weighted-norm", parents=[common], help="best functional with root weight theta_j")
    p.add_argument("vector")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--tree", action="store_true")
    p.set_defaults(func=cmd_weighted_norm)

    p = sub.add_parser("family", parents=[common], help="membership of a finite set")
    p.add_argument("set", help="comma-separated integers")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--ladder", choices=("A", "S"))
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("sup", parents=[common], help="heaviest family member under a weight vector")
    p.add_argument("vector")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--ladder", choices=("A", "S"))
    p.set_defaults(func=cmd_sup)

    p = sub.add_parser("scc", parents=[common], help="build or check a basic special average")
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--eps", default="1/2")
    p.add_argument("--start", type=int, default=1)
    p.add_argument("--check", help="verify an average file instead of building one")
    p.add_argument("--lemma36", action="store_true", help="also check the two-sided norm estimate")
    p.set_defaults(func=cmd_scc)

    for name, func, text in (
        ("bundle", cmd_bundle, "build a bundle over a core tree"),
        ("operator", cmd_operator, "build an operator from bundles of the given heights"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--core", help="core tree JSON")
        p.add_argument("--levels", default="1x2,1x2,1x2", help="regular core as m x branching per level")
        p.add_argument("--start", type=int, default=1)
        p.add_argument("--eps-basic")
        p.add_argument("--eps-periodic")
        p.add_argument("--eps-tilde")
        if name == "bundle":
            p.add_argument("--height", type=int, default=1)
            p.add_argument("--check", action="store_true", help="run the node norm checks")
        else:
            p.add_argument("--r", default="6,24,72,160", help="r_1, ..., r_(N+1)")
            p.add_argument("--heights", default="1,2,2")
            p.add_argument("--c", default="1/100")
        p.set_defaults(func=func)

    p = sub.add_parser("apply", parents=[common], help="apply a stored operator to a vector")
    p.add_argument("--operator", required=True)
    p.add_argument("vector")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--suite", action="append", help=f"one of {', '.join(SUITES)}; repeatable")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", parents=[common], help="search for vectors that T nearly annihilates")
    p.add_argument("--operator", required=True)
    p.add_argument("--probes", required=True, help="JSON list of vectors")
    p.add_argument("--j0", type=int, default=1)
    p.set_defaults(func=cmd_probe)
    return parser


def _config(args: argparse.Namespace, space: SpaceSpec) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    cfg["space"] = space.to_json()
    return cfg


def _cell(value: Any) -> Any:
    return json.dumps(value, sort_keys=True) if isinstance(value, (list, dict)) else value


def _csv(result: dict) -> str:
    rows = []
    if "suites" in result:
        for row in result["suites"]:
            if row["report"] is None:
                rows.append({"suite": row["suite"], "claim": row["claim"], "verdict": row["verdict"]})
                continue
            rep = row["report"]
            for w in rep["witnesses"] or [{}]:
                flat = {"suite": row["suite"], "claim": rep["claim"], "verdict": rep["verdict"]}
                flat.update({k: _cell(v) for k, v in w.items()})
                rows.append(flat)
    else:
        rows.append({k: _cell(v) for k, v in result.items()})
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        space = _space(args)
        result, ok = args.func(args, space)
    except (InputError, ValueError, KeyError, TypeError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    result = jsonable(result)
    if args.format == "csv":
        text = _csv(result)
    else:
        text = json.dumps({"config": jsonable(_config(args, space)), "result": result}, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
