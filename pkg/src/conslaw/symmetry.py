"""Symmetry generators, characteristics, prolongation, conformal factors."""

from __future__ import annotations

from dataclasses import dataclass, field

from conslaw.expr import (
    Expression,
    JetAtom,
    NotDivisibleError,
    VarAtom,
    exact_divide,
    substitute,
)
from conslaw.diffops import apply_multi_derivative, partial_atom, total_derivative
from conslaw.jetspace import Context, DependentVar, IndependentVar, JetCoordinate

POINT = "point"
EVOLUTIONARY = "evolutionary"


class NotConformalError(ArithmeticError):
    """The generator does not map the equation to a multiple of itself."""


@dataclass(frozen=True)
class Generator:
    """Symmetry vector field.

    Point kind: coefficients xi on independents and phi on dependents,
    each depending on independents and order-0 jets only.  Evolutionary
    kind: xi is empty and phi holds the characteristic bodies, of
    arbitrary jet order.
    """

    kind: str
    ctx: Context
    xi: tuple = ()  # ((IndependentVar, Expression), ...)
    phi: tuple = ()  # ((DependentVar, Expression), ...)

    def __post_init__(self):
        if self.kind not in (POINT, EVOLUTIONARY):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.kind == EVOLUTIONARY and self.xi:
            raise ValueError("evolutionary generators carry no xi coefficients")
        if self.kind == POINT:
            for _, e in self.xi + self.phi:
                if any(a.coord.order > 0 for a in (j for j in _jet_atoms(e))):
                    raise ValueError(
                        "point generator coefficients depend only on independents "
                        "and order-0 jets"
                    )

    @staticmethod
    def point(ctx, xi=None, phi=None) -> "Generator":
        return Generator(
            POINT,
            ctx,
            tuple((xi or {}).items()) if isinstance(xi, dict) else tuple(xi or ()),
            tuple((phi or {}).items()) if isinstance(phi, dict) else tuple(phi or ()),
        )

    @staticmethod
    def evolutionary(ctx, phi) -> "Generator":
        return Generator(
            EVOLUTIONARY,
            ctx,
            (),
            tuple(phi.items()) if isinstance(phi, dict) else tuple(phi),
        )

    def xi_of(self, v: IndependentVar) -> Expression:
        for var, e in self.xi:
            if var == v:
                return e
        return Expression.zero(self.ctx)

    def phi_of(self, d: DependentVar) -> Expression:
        for var, e in self.phi:
            if var == d:
                return e
        return Expression.zero(self.ctx)


def _jet_atoms(e: Expression):
    return [a for a in e.atoms() if isinstance(a, JetAtom)]


@dataclass(frozen=True)
class Characteristic:
    """Evolutionary representative W per dependent variable."""

    components: tuple  # ((DependentVar, Expression), ...)

    def of(self, d: DependentVar) -> Expression:
        for var, e in self.components:
            if var == d:
                return e
        raise KeyError(d.name)


@dataclass(frozen=True)
class ConformalFactors:
    mu1: Expression
    mu2: Expression
    lam: Expression


def characteristic(g: Generator) -> Characteristic:
    """W = phi - sum_i xi^i u_i for point generators; phi verbatim otherwise."""
    ctx = g.ctx
    comps = []
    for dep in ctx.originals():
        w = g.phi_of(dep)
        if g.kind == POINT:
            for iv in ctx.independents:
                xi = g.xi_of(iv)
                if not xi.is_zero_form:
                    u_i = Expression.from_atom(
                        ctx, JetAtom(JetCoordinate(dep, ctx.zero_index().raised(iv.position)))
                    )
                    w = w - xi * u_i
        comps.append((dep, w))
    return Characteristic(tuple(comps))


def prolong_coefficient(g: Generator, c: JetCoordinate) -> Expression:
    """Coefficient of d/dc in the prolonged generator.

    Standard jet prolongation: phi^J = D_J W + sum_i xi^i u_{J+e_i}; the
    order-0 case returns phi itself.
    """
    ctx = g.ctx
    if c.index.order == 0:
        return g.phi_of(c.dep)
    w = characteristic(g).of(c.dep)
    out = apply_multi_derivative(w, c.index)
    for iv in ctx.independents:
        xi = g.xi_of(iv)
        if not xi.is_zero_form:
            raised = JetCoordinate(c.dep, c.index.raised(iv.position))
            out = out + xi * Expression.from_atom(ctx, JetAtom(raised))
    return out


def apply_generator(g: Generator, e: Expression) -> Expression:
    """Prolonged action of the generator on a differential function."""
    ctx = g.ctx
    out = Expression.zero(ctx)
    for atom in e.atoms():
        if isinstance(atom, JetAtom):
            p = partial_atom(e, atom)
            if not p.is_zero_form:
                out = out + prolong_coefficient(g, atom.coord) * p
    for iv in ctx.independents:
        xi = g.xi_of(iv)
        if not xi.is_zero_form:
            out = out + xi * partial_atom(e, VarAtom(iv))
    return out


def conformal_factor(g: Generator, eq: Expression) -> ConformalFactors:
    """mu1 from the exact quotient X(E)/E, mu2 = div xi, lambda = mu1 + mu2."""
    if g.kind != POINT:
        raise ValueError("conformal factors are defined for point generators")
    action = apply_generator(g, eq)
    try:
        mu1 = exact_divide(action, eq)
    except NotDivisibleError as exc:
        raise NotConformalError(
            "generator does not map the equation to a multiple of itself"
        ) from exc
    mu2 = Expression.zero(g.ctx)
    for iv in g.ctx.independents:
        mu2 = mu2 + total_derivative(g.xi_of(iv), iv)
    return ConformalFactors(mu1, mu2, mu1 + mu2)


def evolutionary_form(g: Generator) -> Generator:
    """Replace the generator by W d/du; involutive on evolutionary inputs."""
    if g.kind == EVOLUTIONARY:
        return g
    w = characteristic(g)
    return Generator(EVOLUTIONARY, g.ctx, (), w.components)
