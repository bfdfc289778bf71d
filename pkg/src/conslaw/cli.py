"""Command-line front end.

Subcommands operate on problem files; ``corpus`` runs the built-in
examples against their pinned results; ``oracle`` numerically probes an
expression at seeded random points.  Exit codes: 0 all checks passed,
1 a verification failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys

from conslaw import corpus as corpus_mod
from conslaw.conservation import (
    adjoint_system,
    decompose_prop1,
    decompose_prop2,
    multiplier_from_adjoint_solution,
    noether_flux,
    reduce_on_solutions,
    verify_conservation,
    verify_multiplier,
)
from conslaw.dsl import ParseError, parse_expression, parse_problem
from conslaw.expr import max_residual
from conslaw.render import render_json_terms, render_operator, render_text

SCHEMA = 1


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conslaw",
        description="Adjoint systems, conserved vectors, and divergence "
        "decompositions for PDE symmetries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_file=True):
        if needs_file:
            p.add_argument("file", help="problem file")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--oracle-points", type=int, default=20, metavar="N")
        p.add_argument("--tol", type=float, default=1e-8, metavar="X")
        p.add_argument("--seed", type=int, default=0, metavar="S")
        p.add_argument("--max-op-order", type=int, default=3, metavar="K")

    common(sub.add_parser("adjoint", help="print the adjoint system"))
    p = sub.add_parser("flux", help="conserved vector for a generator")
    common(p)
    p.add_argument("--generator", metavar="NAME")
    p = sub.add_parser("decompose", help="factor the total divergence")
    common(p)
    p.add_argument("--generator", metavar="NAME")
    p = sub.add_parser("multiplier", help="multiplier at an adjoint solution")
    common(p)
    p.add_argument("--generator", metavar="NAME")
    p.add_argument("--solution", metavar="NAME", required=True)
    p = sub.add_parser("verify", help="nontriviality and on-solution vanishing")
    common(p)
    p.add_argument("--generator", metavar="NAME")
    p.add_argument("--solution", metavar="NAME")
    p = sub.add_parser("reduce", help="reduce an expression on solutions")
    common(p)
    p.add_argument("--expr", metavar="TEXT", required=True)
    p.add_argument("--with-adjoint", action="store_true",
                   help="reduce over the joint system including the adjoint")
    common(sub.add_parser("corpus", help="run the built-in examples"), needs_file=False)
    p = sub.add_parser("oracle", help="numeric zero test at random points")
    common(p)
    p.add_argument("--expr", metavar="TEXT", required=True)
    return parser


def _load(args):
    with open(args.file, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def _pick_generator(problem, args):
    name = getattr(args, "generator", None)
    if name is None:
        if len(problem.generators) == 1:
            return next(iter(problem.generators.values()))
        raise _UsageError(
            "problem declares several generators; pick one with --generator"
        )
    return problem.generator(name)


def _expr_json(e):
    return {"text": render_text(e), "terms": render_json_terms(e)}


def _emit(report, args, lines):
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _cmd_adjoint(args) -> int:
    problem = _load(args)
    adj = adjoint_system(problem.system)
    report = {
        "schema": SCHEMA,
        "command": "adjoint",
        "equations": [
            {"dep": eq.dep.name, "sign": eq.sign, **_expr_json(eq.body)}
            for eq in adj.equations
        ],
    }
    _emit(report, args, [render_text(eq.body) for eq in adj.equations])
    return 0


def _cmd_flux(args) -> int:
    problem = _load(args)
    g = _pick_generator(problem, args)
    fx = noether_flux(problem.system, g)
    report = {
        "schema": SCHEMA,
        "command": "flux",
        "components": [
            {"ivar": iv.name, **_expr_json(t)}
            for iv, t in zip(problem.ctx.independents, fx.components)
        ],
    }
    _emit(
        report,
        args,
        [
            f"T^{iv.name} = {render_text(t)}"
            for iv, t in zip(problem.ctx.independents, fx.components)
        ],
    )
    return 0


def _cmd_decompose(args) -> int:
    problem = _load(args)
    g = _pick_generator(problem, args)
    lines = []
    report = {"schema": SCHEMA, "command": "decompose", "kind": g.kind}
    if g.kind == "point":
        rep = decompose_prop1(problem.system, g)
        report["multipliers"] = [
            {"equation": name, **_expr_json(q)} for name, q in rep.multipliers
        ]
        report["prop1"] = []
        for cmp_ in rep.prop1:
            entry = {
                "equation": cmp_.equation,
                "extracted": _expr_json(cmp_.extracted),
                "predicted": _expr_json(cmp_.predicted) if cmp_.predicted is not None else None,
                "agree": cmp_.agree,
            }
            if cmp_.conformal is not None:
                entry["conformal"] = {
                    "mu1": _expr_json(cmp_.conformal.mu1),
                    "mu2": _expr_json(cmp_.conformal.mu2),
                    "lambda": _expr_json(cmp_.conformal.lam),
                }
            report["prop1"].append(entry)
            lines.append(f"{cmp_.equation}: Q = {render_text(cmp_.extracted)}")
            if cmp_.conformal is not None:
                lines.append(
                    f"{cmp_.equation}: mu1 = {render_text(cmp_.conformal.mu1)}, "
                    f"mu2 = {render_text(cmp_.conformal.mu2)}, "
                    f"lambda = {render_text(cmp_.conformal.lam)}, "
                    f"prediction agrees: {cmp_.agree}"
                )
    else:
        rep = decompose_prop2(problem.system, g, args.max_op_order)
        report["operator"] = [
            {"index": list(j.counts), **_expr_json(c)} for j, c in rep.operator.terms
        ]
        report["lambda"] = _expr_json(rep.lam)
        lines.append(f"operator = {render_operator(rep.operator, problem.ctx)}")
        lines.append(f"lambda = {render_text(rep.lam)}")
    report["residual_status"] = rep.residual_status
    lines.append(f"residual: {rep.residual_status}")
    _emit(report, args, lines)
    return 0


def _cmd_multiplier(args) -> int:
    problem = _load(args)
    g = _pick_generator(problem, args)
    rep = decompose_prop1(problem.system, g)
    m = multiplier_from_adjoint_solution(rep, problem.solution(args.solution))
    status = verify_multiplier(
        m, problem.system, args.oracle_points, args.tol, args.seed
    )
    report = {
        "schema": SCHEMA,
        "command": "multiplier",
        "components": [{"equation": name, **_expr_json(q)} for name, q in m.components],
        "status": status,
    }
    lines = [f"{name}: Q = {render_text(q)}" for name, q in m.components]
    lines.append(f"status: {status}")
    _emit(report, args, lines)
    return 0 if status != "Failed" else 1


def _cmd_verify(args) -> int:
    problem = _load(args)
    g = _pick_generator(problem, args)
    sol = problem.solution(args.solution) if args.solution else None
    fx = noether_flux(problem.system, g)
    chk = verify_conservation(
        fx, problem.system, sol, args.oracle_points, args.tol, args.seed
    )
    report = {
        "schema": SCHEMA,
        "command": "verify",
        "nontrivial": chk.nontrivial,
        "conserved": chk.conserved,
        "divergence_status": chk.divergence_status.value,
        "reduced_status": chk.reduced_status.value,
        "used_joint_adjoint": chk.used_joint_adjoint,
    }
    ok = chk.nontrivial and chk.conserved
    _emit(
        report,
        args,
        [
            f"nontrivial: {chk.nontrivial}",
            f"conserved: {chk.conserved} (reduced divergence: {chk.reduced_status.value})",
            f"joint adjoint reduction: {chk.used_joint_adjoint}",
        ],
    )
    return 0 if ok else 1


def _cmd_reduce(args) -> int:
    problem = _load(args)
    e = parse_expression(args.expr, problem.ctx)
    r = reduce_on_solutions(e, problem.system, include_adjoint=args.with_adjoint)
    report = {"schema": SCHEMA, "command": "reduce", "reduced": _expr_json(r)}
    _emit(report, args, [render_text(r)])
    return 0


def _cmd_corpus(args) -> int:
    results = corpus_mod.run_all(
        args.oracle_points, args.tol, args.seed, args.max_op_order
    )
    report = {
        "schema": SCHEMA,
        "command": "corpus",
        "entries": [
            {
                "name": r.name,
                "passed": r.passed,
                "checks": [
                    {
                        "label": c.label,
                        "passed": c.passed,
                        "expected": c.expected,
                        "actual": c.actual,
                    }
                    for c in r.checks
                ],
            }
            for r in results
        ],
    }
    lines = []
    for r in results:
        lines.append(f"{r.name}: {'PASS' if r.passed else 'FAIL'} ({len(r.checks)} checks)")
        for c in r.checks:
            if not c.passed:
                lines.append(f"  {c.label}: expected {c.expected!r}, got {c.actual!r}")
    _emit(report, args, lines)
    return 0 if all(r.passed for r in results) else 1


def _cmd_oracle(args) -> int:
    problem = _load(args)
    e = parse_expression(args.expr, problem.ctx)
    worst, ok = max_residual(e, args.oracle_points, args.tol, args.seed)
    report = {
        "schema": SCHEMA,
        "command": "oracle",
        "points": args.oracle_points,
        "tol": args.tol,
        "seed": args.seed,
        "max_residual": worst,
        "passed": ok,
    }
    _emit(
        report,
        args,
        [f"max scaled residual: {worst:.3e}", f"passed: {ok}"],
    )
    return 0 if ok else 1


_COMMANDS = {
    "adjoint": _cmd_adjoint,
    "flux": _cmd_flux,
    "decompose": _cmd_decompose,
    "multiplier": _cmd_multiplier,
    "verify": _cmd_verify,
    "reduce": _cmd_reduce,
    "corpus": _cmd_corpus,
    "oracle": _cmd_oracle,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, _UsageError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
