"""Command-line front end.

Exit codes: 0 when the requested fact is proved (or the command just
computes output), 2 when a vanishing/equality check comes back unknown,
1 on usage or internal errors.  All reports are deterministic apart from
the timing field.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction
from math import factorial

from .expressions import (
    expression_to_json,
    parse_bracket,
    render_bracket,
    render_latex,
)
from .pushforward import d_set, forget_frozen_legs
from .treeclass import acceptable_assignments, enumerate_shapes, weighted_tree_class
from .reduce import (
    eliminate_all_psi,
    integrate,
    pair_with_psi_monomials,
    span_zero_test,
)

SCHEMA = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, "%s: error: %s\n" % (self.prog, message))


def _weights(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("weights must look like 2,1")


def default_budget():
    try:
        return int(os.environ.get("TAUTREL_BUDGET", "3"))
    except ValueError:
        return 3


def _format_expression(expr, fmt):
    if fmt == "json":
        return expression_to_json(expr)
    if fmt == "latex":
        return render_latex(expr)
    return render_bracket(expr)


def _certificate_json(expr, cert):
    out = {"reason": cert.reason, "rounds": cert.budget_spent}
    if cert.reason == "wdvv-span":
        out["target"] = expression_to_json(expr)
        out["combination"] = [
            {"coefficient": {"num": c.numerator, "den": c.denominator},
             "relation": expression_to_json(rel)}
            for c, rel in cert.relations_used()
        ]
    return out


def _report(args, inputs, outcome, started):
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "inputs": inputs,
        "outcome": outcome,
        "budgets": {"rounds": getattr(args, "budget", None),
                    "max_relations": getattr(args, "max_relations", None)},
        "timing": {"seconds": round(time.time() - started, 3)},
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_compute_b(args):
    started = time.time()
    expr = weighted_tree_class(args.g, args.m, args.d)
    if args.stage == "psi-free":
        expr = eliminate_all_psi(expr)
    payload = _format_expression(expr, args.format)
    if args.format == "json":
        _report(args, {"g": args.g, "m": args.m, "d": list(args.d),
                       "stage": args.stage},
                {"expression": payload, "terms": len(expr)}, started)
    else:
        print(payload)
    return 0


def cmd_verify(args):
    started = time.time()
    inputs = {"g": args.g, "m": args.m, "d": list(args.d)}
    warning = None
    if sum(args.d) < 2 * args.g + args.m - 1:
        warning = ("total weight %d is below 2g+m-1 = %d; vanishing is not expected"
                   % (sum(args.d), 2 * args.g + args.m - 1))
    expr = weighted_tree_class(args.g, args.m, args.d)
    outcome = {"proved": False}
    if warning:
        outcome["warning"] = warning
    status = 2
    if expr.is_zero():
        outcome.update(proved=True, method="normalizes-to-zero")
        status = 0
    elif expr.degree() == expr.ambient.dimension:
        value = integrate(expr)
        if value == 0:
            outcome.update(proved=True, method="top-degree-integral")
            status = 0
        else:
            outcome.update(method="top-degree-integral",
                           integral={"num": value.numerator, "den": value.denominator})
    else:
        reduced = eliminate_all_psi(expr)
        if reduced.is_zero():
            outcome.update(proved=True, method="psi-elimination")
            status = 0
        else:
            try:
                cert = span_zero_test(reduced, budget=args.budget,
                                      max_relations=args.max_relations)
            except OverflowError as exc:
                outcome.update(method="wdvv-span", error="budget-overflow",
                               detail=str(exc))
                _report(args, inputs, outcome, started)
                return 2
            outcome.update(method="wdvv-span",
                           certificate=_certificate_json(reduced, cert))
            if cert.zero:
                outcome["proved"] = True
                status = 0
    _report(args, inputs, outcome, started)
    return status


def cmd_check_pushforward(args):
    started = time.time()
    d = args.d
    lhs = forget_frozen_legs(weighted_tree_class(args.g, args.m + args.l, d), args.l)
    rhs = lhs.scale(0)
    for k in sorted(d_set(d, args.l)):
        coeff = Fraction(factorial(args.l))
        for di, ki in zip(d, k):
            coeff /= factorial(di - ki)
        rhs = rhs + weighted_tree_class(args.g, args.m, k).scale(coeff)
    diff = lhs - rhs
    outcome = {"equal": diff.is_zero(), "method": "normalize"}
    status = 0 if diff.is_zero() else 2
    if not diff.is_zero():
        cert = span_zero_test(eliminate_all_psi(diff), budget=args.budget,
                              max_relations=args.max_relations)
        outcome = {"equal": cert.zero, "method": "wdvv-span",
                   "certificate": _certificate_json(diff, cert)}
        status = 0 if cert.zero else 2
    _report(args, {"g": args.g, "n": len(d), "m": args.m, "l": args.l,
                   "d": list(d)}, outcome, started)
    return status


def cmd_enumerate(args):
    started = time.time()
    shapes = enumerate_shapes(args.g, args.n, args.m)
    rows = []
    for shape in shapes:
        row = {"edges": shape.n_edges(),
               "vertices": shape.graph.n_vertices,
               "genera": list(shape.graph.genera)}
        if args.with_extras is not None:
            assignments = acceptable_assignments(shape, args.with_extras)
            row["assignments"] = len(assignments)
        rows.append(row)
    if args.with_extras is not None:
        rows = [r for r in rows if r["assignments"] > 0]
    _report(args, {"g": args.g, "n": args.n, "m": args.m,
                   "with_extras": list(args.with_extras) if args.with_extras else None},
            {"count": len(rows), "shapes": rows}, started)
    return 0


def cmd_reduce(args):
    started = time.time()
    if args.expression == "-":
        text = sys.stdin.read()
    else:
        with open(args.expression) as fh:
            text = fh.read()
    try:
        expr = parse_bracket(text)
    except ValueError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return 1
    inputs = {"file": args.expression, "mode": args.mode, "terms": len(expr)}
    if args.mode == "psi":
        reduced = eliminate_all_psi(expr)
        _report(args, inputs,
                {"expression": _format_expression(reduced, args.format),
                 "terms": len(reduced)}, started)
        return 0
    if args.mode == "pair":
        pairings = pair_with_psi_monomials(expr)
        _report(args, inputs,
                {"pairings": [{"monomial": list(b),
                               "value": {"num": v.numerator, "den": v.denominator}}
                              for b, v in pairings],
                 "all_zero": all(v == 0 for _b, v in pairings)}, started)
        return 0
    # zero-test
    reduced = eliminate_all_psi(expr)
    if reduced.is_zero():
        _report(args, inputs, {"proved": True, "method": "psi-elimination"}, started)
        return 0
    cert = span_zero_test(reduced, budget=args.budget,
                          max_relations=args.max_relations)
    _report(args, inputs,
            {"proved": cert.zero, "method": "wdvv-span",
             "certificate": _certificate_json(reduced, cert)}, started)
    return 0 if cert.zero else 2


def build_parser():
    parser = _Parser(prog="tautrel",
                     description="exact calculus for psi-decorated boundary classes")
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; results never depend on the thread count")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--budget", type=int, default=default_budget(),
                       help="relation-closure rounds (env TAUTREL_BUDGET)")
        p.add_argument("--max-relations", type=int, default=200000)
        p.add_argument("--out", help="write the JSON report to a file")

    p = sub.add_parser("compute-b", help="assemble a weighted tree class")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=_weights, required=True)
    p.add_argument("--stage", choices=["raw", "psi-free"], default="raw")
    p.add_argument("--format", choices=["bracket", "json", "latex"],
                   default="bracket")
    common(p)
    p.set_defaults(func=cmd_compute_b)

    p = sub.add_parser("verify", help="prove a weighted tree class vanishes")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=_weights, required=True)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check-pushforward",
                       help="compare the forgetful pushforward with the weighted sum")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--d", type=_weights, required=True)
    common(p)
    p.set_defaults(func=cmd_check_pushforward)

    p = sub.add_parser("enumerate", help="list tree shapes (and assignment counts)")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--with-extras", type=_weights, default=None,
                   help="weights; list only shapes with an acceptable assignment")
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("reduce", help="run a pipeline stage on a bracket file")
    p.add_argument("expression", help="path to a bracket expression file, or -")
    p.add_argument("--mode", choices=["psi", "zero-test", "pair"], required=True)
    p.add_argument("--format", choices=["bracket", "json", "latex"],
                   default="bracket")
    common(p)
    p.set_defaults(func=cmd_reduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OverflowError as exc:
        print("budget overflow: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
