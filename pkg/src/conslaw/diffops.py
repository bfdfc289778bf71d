"""Differential operators on jet-space expressions.

Total derivatives (chain rule through all jet coordinates), formal
partials with respect to jet coordinates, the Euler operator, divergence,
and finite linear differential operators with expression coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

from conslaw.expr import (
    Expression,
    FuncAtom,
    JetAtom,
    Monomial,
    VarAtom,
    func,
)
from conslaw.jetspace import (
    Context,
    DependentVar,
    IndependentVar,
    JetCoordinate,
    MultiIndex,
)


class UnsupportedDerivativeError(ValueError):
    """Derivative would leave the polynomial normal form (e.g. log of a sum)."""


def _atom_total_derivative(atom, xi: IndependentVar, ctx: Context) -> Expression:
    """D_i of a single atom, as an expression."""
    if isinstance(atom, VarAtom):
        return Expression.const(ctx, 1 if atom.var == xi else 0)
    if isinstance(atom, JetAtom):
        c = atom.coord
        raised = JetCoordinate(c.dep, c.index.raised(xi.position))
        return Expression.from_atom(ctx, JetAtom(raised))
    # function atom: chain rule with the standard head derivatives
    arg = atom.arg
    darg = total_derivative(arg, xi)
    if atom.head == "exp":
        outer = func("exp", arg)
    elif atom.head == "sin":
        outer = func("cos", arg)
    elif atom.head == "cos":
        outer = -func("sin", arg)
    elif atom.head == "log":
        outer = _reciprocal(arg)
    else:  # pragma: no cover - heads validated at construction
        raise AssertionError(atom.head)
    return outer * darg


def _reciprocal(arg: Expression) -> Expression:
    """1/arg for a log argument; only a single independent variable qualifies."""
    if len(arg.terms) == 1:
        ((m, c),) = arg.terms.items()
        if len(m.factors) == 1:
            atom, exp = m.factors[0]
            if isinstance(atom, VarAtom):
                return Expression(
                    arg.ctx, {Monomial.of([(atom, -exp)]): Fraction(1) / c}
                )
    raise UnsupportedDerivativeError(
        "log derivative supported only for a single independent variable argument"
    )


def total_derivative(e: Expression, xi: IndependentVar) -> Expression:
    """D_i e: explicit partial plus chain terms raising every jet index."""
    out = Expression.zero(e.ctx)
    one = Expression.const(e.ctx, 1)
    for m, c in e.terms.items():
        factors = m.factors
        for k, (atom, exp) in enumerate(factors):
            d = _atom_total_derivative(atom, xi, e.ctx)
            if d.is_zero_form:
                continue
            rest = one
            for j, (a2, e2) in enumerate(factors):
                if j == k:
                    if e2 - 1 != 0:
                        rest = rest * Expression(
                            e.ctx, {Monomial.of([(a2, e2 - 1)]): Fraction(1)}
                        )
                else:
                    rest = rest * Expression(
                        e.ctx, {Monomial.of([(a2, e2)]): Fraction(1)}
                    )
            out = out + (c * exp) * d * rest
    return out


def apply_multi_derivative(e: Expression, index: MultiIndex) -> Expression:
    """D_J e for a canonical multi-index J."""
    out = e
    for pos, n in enumerate(index.counts):
        xi = e.ctx.independents[pos]
        for _ in range(n):
            out = total_derivative(out, xi)
    return out


def partial_atom(e: Expression, atom) -> Expression:
    """Formal partial derivative with respect to one atom.

    Jet coordinates are treated as independent unknowns; function atoms
    chain through their arguments.
    """
    out = Expression.zero(e.ctx)
    one = Expression.const(e.ctx, 1)
    for m, c in e.terms.items():
        factors = m.factors
        for k, (a, exp) in enumerate(factors):
            if a == atom:
                d = one
            elif isinstance(a, FuncAtom):
                inner = partial_atom(a.arg, atom)
                if inner.is_zero_form:
                    continue
                if a.head == "exp":
                    d = func("exp", a.arg) * inner
                elif a.head == "sin":
                    d = func("cos", a.arg) * inner
                elif a.head == "cos":
                    d = -func("sin", a.arg) * inner
                else:
                    d = _reciprocal(a.arg) * inner
            else:
                continue
            rest = one
            for j, (a2, e2) in enumerate(factors):
                if j == k:
                    if e2 - 1 != 0:
                        rest = rest * Expression(
                            e.ctx, {Monomial.of([(a2, e2 - 1)]): Fraction(1)}
                        )
                else:
                    rest = rest * Expression(
                        e.ctx, {Monomial.of([(a2, e2)]): Fraction(1)}
                    )
            out = out + (c * exp) * d * rest
    return out


def partial_jet(e: Expression, c: JetCoordinate) -> Expression:
    """Formal partial with respect to a jet coordinate."""
    return partial_atom(e, JetAtom(c))


def all_indices(ctx: Context, max_order: int):
    """Canonical multi-indices of order <= max_order."""
    out = []
    for k in range(max_order + 1):
        for combo in combinations_with_replacement(range(len(ctx.independents)), k):
            counts = [0] * len(ctx.independents)
            for pos in combo:
                counts[pos] += 1
            out.append(MultiIndex(tuple(counts)))
    return out


def euler(e: Expression, w: DependentVar, max_order: int = None) -> Expression:
    """Variational derivative: sum over J of (-1)^|J| D_J d(e)/d(w_J)."""
    actual = e.max_order(w)
    if max_order is None:
        max_order = actual
    elif max_order < actual:
        raise ValueError(
            f"max_order {max_order} below the actual order {actual} of "
            f"{w.name!r}-coordinates in the expression"
        )
    out = Expression.zero(e.ctx)
    for index in all_indices(e.ctx, max_order):
        p = partial_jet(e, JetCoordinate(w, index))
        if p.is_zero_form:
            continue
        sign = -1 if index.order % 2 else 1
        out = out + sign * apply_multi_derivative(p, index)
    return out


def divergence(flux, ctx: Context) -> Expression:
    """Sum of D_i T^i, one flux component per independent variable."""
    flux = list(flux)
    if len(flux) != len(ctx.independents):
        raise ValueError(
            f"expected {len(ctx.independents)} flux components, got {len(flux)}"
        )
    out = Expression.zero(ctx)
    for xi, t in zip(ctx.independents, flux):
        out = out + total_derivative(t, xi)
    return out


@dataclass(frozen=True)
class LinearDiffOperator:
    """Finite sum of c_J * D_J with expression coefficients.

    The empty multi-index is an ordinary multiplication term.
    """

    terms: tuple  # ((MultiIndex, Expression), ...)

    @staticmethod
    def of(pairs) -> "LinearDiffOperator":
        kept = tuple((j, c) for j, c in pairs if not c.is_zero_form)
        return LinearDiffOperator(tuple(sorted(kept, key=lambda p: p[0].counts)))

    def coefficient(self, index: MultiIndex) -> Expression:
        for j, c in self.terms:
            if j == index:
                return c
        return None

    def __call__(self, e: Expression) -> Expression:
        return apply_lindop(self, e)


def apply_lindop(op: LinearDiffOperator, e: Expression) -> Expression:
    out = Expression.zero(e.ctx)
    for index, coeff in op.terms:
        out = out + coeff * apply_multi_derivative(e, index)
    return out
