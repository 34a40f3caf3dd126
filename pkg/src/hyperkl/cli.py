"""Command line entry point.

Exit codes: 0 success, 1 domain failure (axiom or assertion), 2 input
error, 3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .core import AxiomError, StructureError, validate_axioms
from .fileio import (format_rational, hypergroup_to_json, load_group, load_hypergroup,
                     load_measure)
from .measure import DEFAULT_SUPPORT_CAP, DEFAULT_TOL, DEFAULT_WINDOW, trajectory

log = logging.getLogger("hyperkl")

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str)


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _load_measure(args):
    try:
        host = load_hypergroup(args.hypergroup) if args.hypergroup else None
        return load_measure(args.measure, host=host)
    except AxiomError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    except (StructureError, KeyError, TypeError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


def validate_report(path, exhaustive=False, seed=0) -> dict:
    H = load_hypergroup(path, validate=False)
    report = validate_axioms(H, exhaustive=exhaustive, seed=seed)
    out = {"elements": len(H), "violations": report.lines(), "haar": None,
           "haar_invariant": False}
    if report.ok:
        try:
            out["haar"] = [format_rational(w) for w in H.haar]
            out["haar_invariant"] = True
        except AxiomError as exc:
            out["violations"].append(f"haar: {exc}")
    out["valid"] = report.ok and out["haar_invariant"]
    return out


def cmd_validate(args):
    try:
        data = json.loads(Path(args.file).read_text())
        if isinstance(data, dict) and "kind" in data:
            raise StructureError("validate expects a finite hypergroup file")
        out = validate_report(data, args.exhaustive, args.seed)
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.file}: malformed JSON ({exc})", EXIT_INPUT) from None
    except (OSError, StructureError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _emit(_dump(out), args.json)
    return EXIT_OK if out["valid"] else EXIT_DOMAIN


def cmd_decompose(args):
    from .operator import NonConverged, decompose_report

    lam = _load_measure(args)
    try:
        out = decompose_report(lam, tol=args.tol, n_max=args.n_max, window=args.window)
    except (ValueError, TypeError) as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    except NonConverged as exc:
        raise CliError(str(exc), EXIT_BUDGET) from None
    _emit(_dump(out), args.json)
    return EXIT_OK


def trajectory_csv(report: dict) -> str:
    buf = io.StringIO()
    fields = ["n", "support_size", "max_atom", "l1_gap", "window_mass"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in report["rows"]:
        writer.writerow({k: "" if row[k] is None else row[k] for k in fields})
    buf.write(f"# verdict: {report['verdict']}\n")
    if report["idempotent"] is not None:
        buf.write(f"# idempotent: {str(report['idempotent']).lower()}\n")
    if report["truncated"]:
        buf.write("# truncated: support cap exceeded\n")
    return buf.getvalue()


def cmd_iterate(args):
    lam = _load_measure(args)
    try:
        report = trajectory(lam, args.n_max, tol=args.tol, window=args.window,
                            support_cap=args.support_cap)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    _emit(trajectory_csv(report), args.csv)
    return EXIT_BUDGET if report["truncated"] else EXIT_OK


def cmd_demo(args):
    from .demos import run_demo

    try:
        out = run_demo(args.name, seed=args.seed, jobs=args.jobs, p=args.p, s=args.s,
                       n_max=args.n_max or 20)
    except KeyError as exc:
        raise CliError(str(exc.args[0]), EXIT_INPUT) from None
    _emit(_dump(out), args.json)
    return EXIT_OK if out["passed"] else EXIT_DOMAIN


def construct(kind, group=None, subgroup=None, generators=None, left=None, right=None,
              base=None) -> dict:
    from .constructors import (conjugacy_hypergroup, direct_product, double_coset_hypergroup,
                               group_as_hypergroup, subgroup_generated)

    if kind in ("group", "conjugacy", "double-coset"):
        if group is None:
            raise StructureError(f"--group is required for --kind {kind}")
        G = load_group(group)
        if kind == "group":
            return hypergroup_to_json(group_as_hypergroup(G))
        if kind == "conjugacy":
            return hypergroup_to_json(conjugacy_hypergroup(G))
        if subgroup:
            H = [int(x) for x in subgroup.split(",")]
        elif generators:
            H = subgroup_generated(G, [G.labels.index(g) for g in generators.split(",")])
        else:
            raise StructureError("--subgroup or --generators is required for double-coset")
        K, quotient = double_coset_hypergroup(G, H)
        return {**hypergroup_to_json(K), "quotient": quotient}
    if kind == "product":
        if not (left and right):
            raise StructureError("--left and --right are required for --kind product")
        return hypergroup_to_json(direct_product(load_hypergroup(left), load_hypergroup(right)))
    if kind == "zcross":
        if not base:
            raise StructureError("--base is required for --kind zcross")
        return {"kind": "zcross", "base": hypergroup_to_json(load_hypergroup(base))}
    raise StructureError(f"unknown kind {kind!r}")


def cmd_construct(args):
    try:
        out = construct(args.kind, args.group, args.subgroup, args.generators, args.left,
                        args.right, args.base)
    except AxiomError as exc:
        raise CliError(str(exc), EXIT_DOMAIN) from None
    except (StructureError, KeyError, ValueError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _emit(_dump(out), args.json)
    return EXIT_OK


def cmd_counterexample(args):
    from .padic import PadicParams, run_counterexample

    try:
        params = PadicParams(args.p, args.s)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    report = run_counterexample(params, args.n_max or 20, seed=args.seed, strict=False)
    _emit(_dump(report), args.json)
    if not report["passed"]:
        for c in report["checks"]:
            if not c["passed"]:
                print(f"FAILED {c['name']}: {c['detail']}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def _positive(kind):
    def conv(text):
        val = kind(text)
        if val <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val
    return conv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperkl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def knobs(p, n_max=None):
        p.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL)
        p.add_argument("--n-max", type=_positive(int), default=n_max)
        p.add_argument("--window", type=_positive(int), default=DEFAULT_WINDOW)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="check the axioms of a hypergroup file")
    p.add_argument("file")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", help="Krengel-Lin decomposition of a measure")
    p.add_argument("measure")
    p.add_argument("--hypergroup")
    knobs(p, n_max=100_000)
    p.add_argument("--json")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("iterate", help="trajectory of the alternating sequence (CSV)")
    p.add_argument("measure")
    p.add_argument("--hypergroup")
    knobs(p, n_max=100)
    p.add_argument("--support-cap", type=_positive(int), default=DEFAULT_SUPPORT_CAP)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("demo", help="run a demo suite")
    p.add_argument("name")
    knobs(p)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--s", type=int, default=3)
    p.add_argument("--jobs", type=_positive(int), default=1)
    p.add_argument("--json")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("construct", help="build a hypergroup and print its JSON")
    p.add_argument("--kind", required=True,
                   choices=["group", "conjugacy", "double-coset", "product", "zcross"])
    p.add_argument("--group", help="catalog name or group JSON file")
    p.add_argument("--subgroup", help="comma separated element indices")
    p.add_argument("--generators", help="comma separated element labels")
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--base")
    p.add_argument("--json")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("counterexample", help="exact p-adic double-coset counterexample")
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--s", type=int, default=3)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
