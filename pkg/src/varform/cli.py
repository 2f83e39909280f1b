"""Command-line front end: ``varform <command> THEORY.vcth [options]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis
from .dsl import ParseError, parse_theory, render_report
from .dsl.report import to_jsonable
from .testing import run_all

COMMANDS = {
    "el": "Euler-Lagrange equations (checked along two independent routes)",
    "theta": "presymplectic potential from integration by parts",
    "omega": "presymplectic current and its identities",
    "symmetries": "certify the declared symmetries",
    "noether": "Noether currents of the declared symmetries",
    "gauge": "Noether identities and degeneracy of gauge symmetries",
    "hamiltonian": "declared Hamiltonian pairs and their brackets",
    "onshell": "declared solutions, conservation laws and finite-difference checks",
    "transgress": "transgression of the presymplectic current (mechanics)",
    "check-all": "run every certificate",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--max-order", type=int, default=6, metavar="N", help="reject input beyond jet order N (default 6)")
    common.add_argument("--tol", type=float, default=1e-6, help="finite-difference tolerance (default 1e-6)")
    common.add_argument("--h", type=float, default=1e-4, help="finite-difference step (default 1e-4)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")

    parser = argparse.ArgumentParser(prog="varform", description="Variational analysis of local Lagrangian field theories.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, text in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        p.add_argument("theory", help="theory file (.vcth)")
    st = sub.add_parser("selftest", parents=[common], help="randomized invariant suites")
    st.add_argument("--scale", type=float, default=1.0, help="fraction of the default case counts")
    return parser


def _human(results: dict, out) -> None:
    data = to_jsonable(results)
    print(f"theory {data.pop('theory', '?')}", file=out)
    checks = data.pop("checks", {})
    notes = data.pop("notes", [])
    for key in sorted(data):
        print(f"\n[{key}]", file=out)
        _print_tree(data[key], out, "  ")
    if checks:
        print("\n[checks]", file=out)
        for name in sorted(checks):
            print(f"  {'pass' if checks[name] else 'FAIL'}  {name}", file=out)
    for n in notes:
        print(f"note: {n}", file=out)


def _print_tree(value, out, indent: str) -> None:
    if isinstance(value, dict):
        if not value:
            print(f"{indent}(none)", file=out)
        for k in sorted(value):
            v = value[k]
            if isinstance(v, (dict, list)) and v:
                print(f"{indent}{k}:", file=out)
                _print_tree(v, out, indent + "  ")
            else:
                print(f"{indent}{k}: {_scalar(v)}", file=out)
    elif isinstance(value, list):
        for v in value:
            print(f"{indent}- {_scalar(v)}", file=out)
    else:
        print(f"{indent}{_scalar(value)}", file=out)


def _scalar(v) -> str:
    if isinstance(v, dict) and not v:
        return "0"
    if isinstance(v, bool):
        return "yes" if v else "no"
    return str(v)


def _selftest(args, out) -> int:
    results = run_all(args.seed, args.scale)
    ok = all(r.ok for r in results)
    if args.json:
        data = {
            "selftest": {r.name: {"cases": r.cases, "failures": r.failures[:20]} for r in results},
            "checks": {r.name: r.ok for r in results},
            "seed": args.seed,
        }
        out.write(render_report(data))
    else:
        for r in results:
            print(r.summary(), file=out)
            for f in r.failures[:5]:
                print(f"  {f}", file=out)
    return 0 if ok else 1


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "selftest":
        return _selftest(args, out)
    path = Path(args.theory)
    try:
        text = path.read_bytes()
    except FileNotFoundError:
        print(f"varform: file not found: {path}", file=err)
        return 2
    except OSError as exc:
        print(f"varform: cannot read {path}: {exc.strerror}", file=err)
        return 2
    try:
        theory = parse_theory(text)
    except ParseError as exc:
        print(f"{path}:{exc.line}:{exc.col}: {exc.message}", file=err)
        return 2
    order = analysis.theory_max_order(theory)
    if order > args.max_order:
        print(f"{path}: jet order {order} exceeds --max-order {args.max_order}", file=err)
        return 2
    opts = analysis.Options(tol=args.tol, h=args.h, seed=args.seed)
    result = analysis.analyze(theory, args.command, opts)
    report = result.finish()
    if args.json:
        out.write(render_report(report))
    else:
        _human(report, out)
    if not result.ok:
        failed = sorted(k for k, v in result.checks.items() if not v)
        print(f"varform: failed certificates: {', '.join(failed)}", file=err)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
