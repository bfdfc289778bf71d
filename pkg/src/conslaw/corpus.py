"""Built-in example corpus with pinned expected results.

Each entry is a problem file under ``problems/`` whose task list drives the
full pipeline; the produced values are compared against the expected
strings recorded here.  Entries are independent and run in parallel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

from conslaw.conservation import (
    decompose_prop1,
    decompose_prop2,
    adjoint_system,
    multiplier_from_adjoint_solution,
    noether_flux,
    verify_conservation,
    verify_multiplier,
)
from conslaw.dsl import Problem, parse_problem
from conslaw.render import render_operator, render_text


ENTRY_NAMES = (
    "heat_evolutionary",
    "heat_point",
    "kdv",
    "nls",
    "wave_evolutionary",
    "wave_lorentz",
)


@dataclass(frozen=True)
class Check:
    label: str
    expected: str
    actual: str

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass(frozen=True)
class CorpusResult:
    name: str
    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def load(name: str) -> Problem:
    if name not in ENTRY_NAMES:
        raise KeyError(f"no corpus entry named {name!r}")
    text = resources.files("conslaw").joinpath(f"problems/{name}.prob").read_text()
    return parse_problem(text)


def execute_tasks(problem: Problem, max_op_order: int = 3,
                  points: int = 20, tol: float = 1e-8, seed: int = 0):
    """Run the problem's task list; returns [(label, value string)]."""
    sys_ = problem.system
    ctx = problem.ctx
    out = []
    for task in problem.tasks:
        if task.directive == "adjoint":
            for eq in adjoint_system(sys_).equations:
                out.append((f"adjoint.{eq.dep.name}", render_text(eq.body)))
        elif task.directive == "flux":
            g = task.args[0]
            fx = noether_flux(sys_, problem.generator(g))
            for iv, t in zip(ctx.independents, fx.components):
                out.append((f"flux.{g}.{iv.name}", render_text(t)))
        elif task.directive == "decompose1":
            g = task.args[0]
            rep = decompose_prop1(sys_, problem.generator(g))
            for cmp_ in rep.prop1:
                base = f"prop1.{g}.{cmp_.equation}"
                out.append((f"{base}.Q", render_text(cmp_.extracted)))
                out.append((f"{base}.agree", str(cmp_.agree)))
                if cmp_.conformal is not None:
                    out.append((f"{base}.mu1", render_text(cmp_.conformal.mu1)))
                    out.append((f"{base}.mu2", render_text(cmp_.conformal.mu2)))
                    out.append((f"{base}.lam", render_text(cmp_.conformal.lam)))
        elif task.directive == "decompose2":
            g = task.args[0]
            order = int(task.args[1]) if len(task.args) > 1 else max_op_order
            rep = decompose_prop2(sys_, problem.generator(g), order)
            out.append((f"prop2.{g}.op", render_operator(rep.operator, ctx)))
            out.append((f"prop2.{g}.lam", render_text(rep.lam)))
        elif task.directive == "multiplier":
            g, s = task.args[0], task.args[1]
            rep = decompose_prop1(sys_, problem.generator(g))
            m = multiplier_from_adjoint_solution(rep, problem.solution(s))
            for name, q in m.components:
                out.append((f"multiplier.{g}.{s}.{name}", render_text(q)))
            out.append(
                (f"multiplier.{g}.{s}.status", verify_multiplier(m, sys_, points, tol, seed))
            )
        elif task.directive == "verify":
            g = task.args[0]
            sol = problem.solution(task.args[1]) if len(task.args) > 1 else None
            fx = noether_flux(sys_, problem.generator(g))
            chk = verify_conservation(fx, sys_, sol, points, tol, seed)
            label = f"verify.{g}" + (f".{task.args[1]}" if len(task.args) > 1 else "")
            out.append(
                (
                    label,
                    f"nontrivial={chk.nontrivial} conserved={chk.conserved} "
                    f"joint={chk.used_joint_adjoint}",
                )
            )
    return out


EXPECTED = {
    "heat_point": {
        "adjoint.u": "D(v,t) + D(v,x,x)",
        "flux.boost.x": "-2*t*D(u,x)*D(v,x) - x*u*D(v,x) + 2*t*D(u,t)*v + x*D(u,x)*v + u*v",
        "flux.boost.t": "-2*t*D(u,x)*v - x*u*v",
        "prop1.boost.heat.Q": "2*t*D(v,x) - x*v",
        "prop1.boost.heat.agree": "False",
        "prop1.boost.heat.mu1": "-x",
        "prop1.boost.heat.mu2": "0",
        "prop1.boost.heat.lam": "-x",
        "multiplier.boost.s1.heat": "-x^2 + 2*t",
        "multiplier.boost.s1.status": "Verified",
        "verify.boost.s1": "nontrivial=True conserved=True joint=False",
    },
    "heat_evolutionary": {
        "flux.g1.x": "t*D(u,x)*D(v,x) + 1/2*x*u*D(v,x) - t*D(u,x,x)*v - 1/2*x*D(u,x)*v - 1/2*u*v",
        "flux.g1.t": "t*D(u,x)*v + 1/2*x*u*v",
        "flux.g2.x": "D(u,x,x)*D(v,x) - D(u,x,x,x)*v",
        "flux.g2.t": "D(u,x,x)*v",
        "flux.g3.x": "2*t*D(u,x,x,x)*D(v,x) + x*D(u,x,x)*D(v,x) - 2*t*D(u,x,x,x,x)*v - x*D(u,x,x,x)*v - D(u,x,x)*v",
        "flux.g3.t": "2*t*D(u,x,x,x)*v + x*D(u,x,x)*v",
        "prop2.g1.op": "(1/2*x) + (t)*D[x]",
        "prop2.g1.lam": "1/2*x",
        "prop2.g2.op": "(1)*D[x,x]",
        "prop2.g2.lam": "0",
        "prop2.g3.op": "(x)*D[x,x] + (2*t)*D[x,x,x]",
        "prop2.g3.lam": "0",
    },
    "wave_lorentz": {
        "adjoint.u": "-D(v,t,t) + D(v,x,x)",
        "flux.lorentz.x": "-x*D(u,t)*D(v,x) - t*D(u,x)*D(v,x) + t*D(u,t,t)*v + x*D(u,x,t)*v + D(u,t)*v",
        "flux.lorentz.t": "x*D(u,t)*D(v,t) + t*D(u,x)*D(v,t) - t*D(u,x,t)*v - x*D(u,x,x)*v - D(u,x)*v",
        "prop1.lorentz.wave.Q": "x*D(v,t) + t*D(v,x)",
        "prop1.lorentz.wave.agree": "True",
        "prop1.lorentz.wave.mu1": "0",
        "prop1.lorentz.wave.mu2": "0",
        "prop1.lorentz.wave.lam": "0",
        "multiplier.lorentz.s1.wave": "t^2 + x^2",
        "multiplier.lorentz.s1.status": "Verified",
        "verify.lorentz.s1": "nontrivial=True conserved=True joint=False",
    },
    "wave_evolutionary": {
        "flux.lorentz.x": "x*D(u,t)*D(v,x) + t*D(u,x)*D(v,x) - x*D(u,x,t)*v - t*D(u,x,x)*v - D(u,t)*v",
        "flux.lorentz.t": "-x*D(u,t)*D(v,t) - t*D(u,x)*D(v,t) + x*D(u,t,t)*v + t*D(u,x,t)*v + D(u,x)*v",
        "prop2.lorentz.op": "(x)*D[t] + (t)*D[x]",
        "prop2.lorentz.lam": "0",
    },
    "kdv": {
        "adjoint.u": "-u*D(v,x) + D(v,t) - D(v,x,x,x)",
        "flux.scale.x": "-3*t*u*D(u,t)*v - 3*t*D(u,t)*D(v,x,x) - x*D(u,x)*D(v,x,x) + 3*t*D(u,x,t)*D(v,x) + x*D(u,x,x)*D(v,x) - 3*t*D(u,x,x,t)*v - x*D(u,t)*v - 2*u^2*v - 2*u*D(v,x,x) + 3*D(u,x)*D(v,x) - 4*D(u,x,x)*v",
        "flux.scale.t": "3*t*u*D(u,x)*v + 3*t*D(u,x,x,x)*v + x*D(u,x)*v + 2*u*v",
        "prop1.scale.kdv.Q": "-3*t*D(v,t) - x*D(v,x) + v",
        "prop1.scale.kdv.agree": "True",
        "prop1.scale.kdv.mu1": "5",
        "prop1.scale.kdv.mu2": "-4",
        "prop1.scale.kdv.lam": "1",
        "prop2.scalev.op": "(5) + (3*t)*D[t] + (x)*D[x]",
        "prop2.scalev.lam": "5",
    },
    "nls": {
        "adjoint.p": "-2*p*q*w - q^2*v - 3*p^2*v + D(w,t) + D(v,x,x)",
        "adjoint.q": "-3*q^2*w - p^2*w - 2*p*q*v + D(w,x,x) - D(v,t)",
        "flux.shift.x": "-D(q,t)*D(w,x) + D(q,x,t)*w - D(p,t)*D(v,x) + D(p,x,t)*v",
        "flux.shift.t": "q^3*w + p^2*q*w + p*q^2*v + p^3*v - D(q,x,x)*w - D(p,x,x)*v",
        "prop1.shift.e1.Q": "D(v,t)",
        "prop1.shift.e1.agree": "True",
        "prop1.shift.e1.mu1": "0",
        "prop1.shift.e1.mu2": "0",
        "prop1.shift.e1.lam": "0",
        "prop1.shift.e2.Q": "D(w,t)",
        "prop1.shift.e2.agree": "True",
        "prop1.shift.e2.mu1": "0",
        "prop1.shift.e2.mu2": "0",
        "prop1.shift.e2.lam": "0",
        "verify.shift.s1": "nontrivial=True conserved=True joint=True",
    },
}


def run_entry(name: str, points: int = 20, tol: float = 1e-8, seed: int = 0,
              max_op_order: int = 3) -> CorpusResult:
    problem = load(name)
    produced = dict(execute_tasks(problem, max_op_order, points, tol, seed))
    checks = []
    for label, expected in EXPECTED[name].items():
        checks.append(Check(label, expected, produced.get(label, "<missing>")))
    for label in produced:
        if label not in EXPECTED[name]:
            checks.append(Check(label, "<unexpected>", produced[label]))
    return CorpusResult(name, tuple(checks))


def run_all(points: int = 20, tol: float = 1e-8, seed: int = 0,
            max_op_order: int = 3, parallel: bool = True):
    """All entries, in name order regardless of completion order."""
    if parallel:
        with ThreadPoolExecutor(max_workers=len(ENTRY_NAMES)) as pool:
            futures = {
                name: pool.submit(run_entry, name, points, tol, seed, max_op_order)
                for name in ENTRY_NAMES
            }
            return [futures[name].result() for name in ENTRY_NAMES]
    return [run_entry(name, points, tol, seed, max_op_order) for name in ENTRY_NAMES]
