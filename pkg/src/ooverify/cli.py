"""Command-line entry point.

Subcommands: parse, run, transform, wp, check-proof, suite.  Exit codes:
0 success, 1 usage error, 2 domain rejection (parse/type/proof failure or a
counterexample), 3 inconclusive (out of fuel or unknown obligations).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import interp, parser, proofs, suites, syntax as syn, transform as tr, wp
from .assertions import Universe
from .state import State, render_state
from .syntax import KERNEL, OO, RECURSIVE, Program

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2
EXIT_INCONCLUSIVE = 3

FLAVOR_BY_EXT = {".oo": OO, ".rec": RECURSIVE, ".krn": KERNEL}


def _universe(args) -> Universe:
    lo_hi = args.int_range.split("..")
    if len(lo_hi) != 2:
        raise SystemExit("--int-range expects LO..HI")
    return Universe(int(lo_hi[0]), int(lo_hi[1]), args.objects)


def _load_program(path: str) -> Program:
    text = Path(path).read_text(encoding="utf-8")
    flavor = FLAVOR_BY_EXT.get(Path(path).suffix)
    prog = parser.parse_program(text, flavor)
    diags = syn.typecheck(prog)
    if diags:
        for d in diags:
            print(f"{path}: {d}", file=sys.stderr)
        raise SystemExit(EXIT_REJECTED)
    return prog


def _initial_state(args, prog: Program) -> State:
    if args.state:
        text = Path(args.state).read_text(encoding="utf-8")
        return parser.parse_state(text, parser.build_table(prog))
    sigma = State.make()
    if prog.flavor == OO:
        from .state import ObjV, Oid

        sigma = sigma.with_normal(syn.THIS, ObjV(Oid(0)))
    return sigma


def cmd_parse(args) -> int:
    prog = _load_program(args.file)
    print(parser.render_program(prog), end="")
    return EXIT_OK


def cmd_run(args) -> int:
    prog = _load_program(args.file)
    sigma = _initial_state(args, prog)
    try:
        result = interp.run(prog, sigma, args.fuel)
    except interp.PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    if isinstance(result, interp.OutOfFuel):
        print(f"OUT-OF-FUEL after {result.steps} steps")
        return EXIT_INCONCLUSIVE
    if isinstance(result, interp.Failed):
        print("FAIL")
        return EXIT_OK
    print(render_state(result.state))
    return EXIT_OK


def cmd_transform(args) -> int:
    prog = _load_program(args.file)
    if prog.flavor != OO:
        print("error: transform expects an object-oriented program", file=sys.stderr)
        return EXIT_REJECTED
    image = tr.transform_program(prog)
    header = "".join(
        f"// {name} : {old!r} (instance)  ->  {name} : {new!r} (normal array)\n"
        for name, old, new in image.var_mapping)
    text = header + parser.render_program(image.program)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_wp(args) -> int:
    prog = _load_program(args.file)
    table = parser.build_table(prog)
    post = parser.parse_assertion(args.post, table)
    mode = wp.STRONG if args.mode == "sp" else wp.PARTIAL
    if args.symbolic:
        try:
            result = wp.wp_symbolic(prog.main, post, mode)
        except wp.WpUnsupported as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_REJECTED
        print(parser.render_expr(result))
        return EXIT_OK
    universe = _universe(args)
    refs = sorted(
        {table[name] for name in syn.var_of(prog.main) | syn.var_of_decls(prog.decls)}
        | proofs.free_refs(post),
        key=lambda r: (r.kind, r.name))
    for r in refs:
        if r.is_array:
            print("error: semantic mode needs a simple-variable footprint; "
                  "arrays require the symbolic mode or a test-defined space",
                  file=sys.stderr)
            return EXIT_REJECTED
    slots = wp.slots_for_refs(list(refs), universe)
    space = wp.StateSpace(universe, tuple(slots), this_nonnull=(prog.flavor == OO))
    result = wp.wp_semantic(prog.main, post, space, prog, args.fuel, mode)
    for sigma in result.accepted:
        print(render_state(sigma))
    print(f"accepted {len(result.accepted)} of {space.size()} states"
          f" ({len(result.unknown)} unknown)")
    return EXIT_INCONCLUSIVE if result.unknown else EXIT_OK


def cmd_check_proof(args) -> int:
    prog = _load_program(args.program)
    table = parser.build_table(prog)
    text = Path(args.file).read_text(encoding="utf-8")
    try:
        deriv = parser.parse_proof(text, table)
    except parser.ParseError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    verdict = proofs.check(deriv, args.system, prog, _universe(args))
    if not verdict.accepted:
        print(f"REJECTED\t{verdict.reason}")
        return EXIT_REJECTED
    for ob, status in verdict.obligations:
        print(f"{ob.origin}\t{status}")
    if verdict.all_valid:
        print("ACCEPTED")
        return EXIT_OK
    if verdict.has_unknown:
        print("ACCEPTED-WITH-UNKNOWN")
        return EXIT_INCONCLUSIVE
    print("ACCEPTED-WITH-COUNTEREXAMPLE")
    return EXIT_REJECTED


def cmd_suite(args) -> int:
    names = list(suites.SUITES) if args.name == "all" else [args.name]
    failed = False
    for name in names:
        if name not in suites.SUITES:
            print(f"unknown suite {name}; available: {', '.join(suites.SUITES)}",
                  file=sys.stderr)
            return EXIT_USAGE
        report = suites.run_suite(name, seed=args.seed, cases=args.cases)
        for line in report.lines():
            print(line)
        failed = failed or not report.ok
    return EXIT_REJECTED if failed else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="ooverify")
    ap.add_argument("--fuel", type=int, default=interp.DEFAULT_FUEL)
    ap.add_argument("--int-range", default="-8..8", metavar="LO..HI")
    ap.add_argument("--objects", type=int, default=4)
    ap.add_argument("--seed", type=int, default=42)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo the normalized rendering")
    p.add_argument("file")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("run", help="run a program and print the final footprint")
    p.add_argument("file")
    p.add_argument("--state", help="initial state literal file")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("transform", help="transform an object-oriented program")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("wp", help="weakest preconditions")
    p.add_argument("file")
    p.add_argument("--post", required=True)
    p.add_argument("--mode", choices=["p", "sp"], default="sp")
    p.add_argument("--symbolic", action="store_true")
    p.set_defaults(fn=cmd_wp)

    p = sub.add_parser("check-proof", help="check a derivation file")
    p.add_argument("file")
    p.add_argument("--system", required=True, choices=sorted(proofs.SYSTEMS))
    p.add_argument("--program", required=True)
    p.set_defaults(fn=cmd_check_proof)

    p = sub.add_parser("suite", help="run a named property suite")
    p.add_argument("name")
    p.add_argument("--cases", type=int, default=None)
    p.set_defaults(fn=cmd_suite)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except parser.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
