"""Command-line entry point.

Exit codes: 0 success, 1 audit violation or closed-form mismatch, 2 usage
error or unknown class name, 3 unsolvable invariant, 4 bad geometry config or
cache file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from .arith import degree_to_steps, format_rational, parse_rational
from .chowring import load_geometry, verify_presentation
from .correlators import (
    InvariantTable, evaluate_with_provenance, format_key, key_to_json, make_key,
    table_from_json, table_to_json,
)
from .errors import CacheError, GeometryError, SolverError
from .targets import BUILTIN_CONFIGS, builtin
from .wdvv import AuditBounds, hodge_table, kontsevich_numbers, wdvv_residual_audit

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_UNSOLVABLE, EXIT_CONFIG = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().rstrip("\n")


def load_cache(path, t) -> InvariantTable:
    p = Path(path)
    if not p.exists():
        return InvariantTable.for_target(t)
    try:
        obj = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CacheError(f"cannot read cache {path}: {exc}") from exc
    return table_from_json(obj, t)


def save_cache(path, table, t) -> None:
    p = Path(path)
    text = _dump_json(table_to_json(table, t)) + "\n"
    fd, tmp = tempfile.mkstemp(dir=p.parent or ".", prefix=p.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, p)


# -- subcommands ---------------------------------------------------------------

def cmd_invariant(args, t, table):
    names = [s.strip() for s in args.ins.split(",") if s.strip()]
    if args.degree is not None:
        try:
            steps = degree_to_steps(parse_rational(args.degree), t.degree_step)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(str(exc)) from exc
    else:
        steps = args.degree_steps
        if steps < 0:
            raise UsageError("degree steps must be non-negative")
    try:
        key = make_key(names, steps, t)
    except KeyError as exc:
        raise UsageError(f"unknown class {exc.args[0]!r}; {t.name} has {', '.join(t.names())}") from exc
    value, tag = evaluate_with_provenance(key, table, t)
    if args.format == "json":
        print(_dump_json({"key": key_to_json(key, t), "value": format_rational(value),
                          "provenance": tag}))
    elif args.format == "csv":
        print(_csv(["key", "value", "provenance"], [[format_key(key, t), format_rational(value), tag]]))
    else:
        print(f"{format_rational(value)} ({tag})")
    return EXIT_OK


def cmd_hodge_table(args, t, table):
    if args.gmax < 0:
        raise UsageError("gmax must be non-negative")
    rows = hodge_table(args.gmax, t, table)
    if args.format == "json":
        print(_dump_json({
            "target": t.name,
            "all_match": all(r.match for r in rows),
            "rows": [{"g": r.g, "recursion": format_rational(r.value),
                      "closed_form": format_rational(r.closed_form), "match": r.match}
                     for r in rows],
        }))
    elif args.format == "csv":
        print(_csv(["g", "recursion", "closed_form", "match"],
                   [[r.g, format_rational(r.value), format_rational(r.closed_form),
                     str(r.match).lower()] for r in rows]))
    else:
        for r in rows:
            flag = "match" if r.match else "MISMATCH"
            print(f"{r.g:>4}  {format_rational(r.value):>24}  {format_rational(r.closed_form):>24}  {flag}")
    return EXIT_OK if all(r.match for r in rows) else EXIT_VIOLATION


def cmd_kontsevich(args, t, table):
    if args.dmax < 1:
        raise UsageError("dmax must be at least 1")
    values = kontsevich_numbers(args.dmax, t, table)
    rows = list(enumerate(values, start=1))
    if args.format == "json":
        print(_dump_json({"target": t.name,
                          "rows": [{"d": d, "N": format_rational(v)} for d, v in rows]}))
    elif args.format == "csv":
        print(_csv(["d", "N"], [[d, format_rational(v)] for d, v in rows]))
    else:
        for d, v in rows:
            print(f"{d:>3}  {format_rational(v)}")
    return EXIT_OK


def cmd_audit(args, t, table):
    try:
        steps = None if args.dmax is None else list(range(args.dmax + 1))
        bounds = AuditBounds.defaults(t, extras_class=args.extras_class,
                                      max_extras=args.max_extras, degree_steps=steps)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad audit bounds: {exc}") from exc
    ring = verify_presentation(t)
    report = wdvv_residual_audit(t, table, bounds)
    ok = ring.ok and report.ok
    if args.format == "json":
        print(_dump_json({
            "target": t.name,
            "ok": ok,
            "ring": ring.to_dict(t),
            "equations": report.equations,
            "nontrivial": report.nontrivial,
            "violations": report.to_json(t),
        }))
    elif args.format == "csv":
        print(_csv(["context", "residual", "error"],
                   [[json.dumps(v.equation.context_json(t), sort_keys=True),
                     "" if v.residual is None else format_rational(v.residual), v.error]
                    for v in report.violations]))
    else:
        print(f"ring: {'pass' if ring.ok else 'FAIL'}")
        for c in ring.failures():
            print(f"  {c.name}: {c.detail}")
        print(f"wdvv: {report.equations} equations, {report.nontrivial} nontrivial, "
              f"{len(report.violations)} violations")
        for v in report.violations:
            line = v.equation.render(t)
            if v.error:
                line += f"  [{v.error}]"
            else:
                line += f"  residual {format_rational(v.residual)}"
            print(f"  {line}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_ring_check(args, t, table):
    report = verify_presentation(t)
    if args.format == "json":
        print(_dump_json(report.to_dict(t)))
    elif args.format == "csv":
        print(_csv(["check", "passed", "detail"],
                   [[c.name, str(c.passed).lower(), c.detail] for c in report.checks]))
    else:
        for c in report.checks:
            print(f"{'pass' if c.passed else 'FAIL'}  {c.name}" + (f"  {c.detail}" if c.detail else ""))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_geometry_validate(args, t, table):
    summary = {
        "name": t.name,
        "dim": t.dim,
        "degree_step": format_rational(t.degree_step),
        "c1_per_step": format_rational(t.c1_per_step),
        "basis": [{"name": b.name, "cr_degree": b.cr_degree, "sector": b.sector} for b in t.basis],
        "seeds": len(t.seeds),
        "valid": True,
    }
    if args.format == "json":
        print(_dump_json(summary))
    elif args.format == "csv":
        print(_csv(["name", "cr_degree", "sector"], [[b.name, b.cr_degree, b.sector] for b in t.basis]))
    else:
        print(f"{t.name}: valid (dim {t.dim}, basis {', '.join(t.names())})")
    return EXIT_OK


COMMANDS = {
    "invariant": cmd_invariant,
    "hodge-table": cmd_hodge_table,
    "kontsevich": cmd_kontsevich,
    "audit": cmd_audit,
    "ring-check": cmd_ring_check,
    "geometry-validate": cmd_geometry_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--target", choices=sorted(BUILTIN_CONFIGS), help="built-in target")
    src.add_argument("--geometry", metavar="PATH", help="GeometryConfig JSON file")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--cache", metavar="PATH", help="load and save the invariant table here")

    parser = argparse.ArgumentParser(prog="orbgw", description="Exact genus-zero orbifold "
                                     "Gromov-Witten invariants from WDVV recursion.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invariant", parents=[common], help="compute one invariant")
    p.add_argument("--ins", required=True, help="comma-separated class names, e.g. p,g,g,g")
    deg = p.add_mutually_exclusive_group(required=True)
    deg.add_argument("--degree", help="curve degree, e.g. 1/2")
    deg.add_argument("--degree-steps", type=int, help="degree in minimal units")

    p = sub.add_parser("hodge-table", parents=[common], help="hyperelliptic Hodge integrals")
    p.add_argument("--gmax", type=int, default=10)

    p = sub.add_parser("kontsevich", parents=[common], help="rational plane curve counts")
    p.add_argument("--dmax", type=int, default=6)

    p = sub.add_parser("audit", parents=[common], help="WDVV residual and ring audit")
    p.add_argument("--extras-class", help="class repeated in the extras")
    p.add_argument("--max-extras", type=int, help="largest number of extras")
    p.add_argument("--dmax", type=int, help="audit total degree steps 0..DMAX")

    sub.add_parser("ring-check", parents=[common], help="verify the orbifold Chow ring")
    sub.add_parser("geometry-validate", parents=[common], help="load and validate a geometry")
    return parser


_DEFAULT_TARGET = {"kontsevich": "p2"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.geometry:
            t = load_geometry(args.geometry)
        else:
            t = builtin(args.target or _DEFAULT_TARGET.get(args.command, "p112"))
        table = load_cache(args.cache, t) if args.cache else InvariantTable.for_target(t)
    except (GeometryError, CacheError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        code = COMMANDS[args.command](args, t, table)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        code = EXIT_UNSOLVABLE
    except (GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.cache:
        save_cache(args.cache, table, t)
    return code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
