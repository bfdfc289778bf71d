"""Expression kernel: normal-form differential polynomials.

An Expression is a map monomial -> exact rational coefficient over jet
coordinates, independent variables, and elementary-function atoms
(exp/sin/cos/log).  Normal forms are unique for any polynomial in the
atoms; no trig or exponential identities are applied, so residual
equalities that depend on such identities fall to the numeric oracle.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from conslaw.jetspace import (
    Context,
    DependentVar,
    IndependentVar,
    JetCoordinate,
    coordinate_sort_key,
)

FUNCTION_HEADS = ("exp", "sin", "cos", "log")

_MATH_FN = {"exp": math.exp, "sin": math.sin, "cos": math.cos, "log": math.log}


class ContextMismatchError(ValueError):
    """Two expressions from different contexts were combined."""


class NotDivisibleError(ArithmeticError):
    """exact_divide found a nonzero remainder."""


class MissingAssignmentError(KeyError):
    """eval_numeric was given a point missing an atom of the expression."""


class SubstitutionError(ValueError):
    """Invalid binding passed to substitute."""


# ---------------------------------------------------------------------------
# Atoms


@dataclass(frozen=True)
class VarAtom:
    var: IndependentVar

    def sort_key(self):
        return (0, self.var.position)


@dataclass(frozen=True)
class JetAtom:
    coord: JetCoordinate

    def sort_key(self):
        return (1,) + coordinate_sort_key(self.coord)


@dataclass(frozen=True)
class FuncAtom:
    head: str
    arg: "Expression"

    def __post_init__(self):
        if self.head not in FUNCTION_HEADS:
            raise ValueError(f"unknown function head {self.head!r}")

    def sort_key(self):
        return (2, self.head, self.arg.key())


# ---------------------------------------------------------------------------
# Monomials


@dataclass(frozen=True)
class Monomial:
    """Product of atom powers; factors sorted by atom order, no zero powers.

    Exponents are positive except that independent-variable atoms may
    carry negative powers (these only arise from log derivatives).
    """

    factors: tuple  # ((atom, exponent), ...)

    @staticmethod
    def unit() -> "Monomial":
        return Monomial(())

    @staticmethod
    def of(pairs) -> "Monomial":
        merged = {}
        for atom, e in pairs:
            merged[atom] = merged.get(atom, 0) + e
        items = [(a, e) for a, e in merged.items() if e != 0]
        items.sort(key=lambda p: p[0].sort_key())
        return Monomial(tuple(items))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.factors)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial.of(self.factors + other.factors)

    def divides(self, other: "Monomial") -> bool:
        exps = dict(other.factors)
        return all(exps.get(a, 0) >= e for a, e in self.factors)

    def divide(self, other: "Monomial") -> "Monomial":
        """self / other; requires other.divides(self)."""
        return Monomial.of(self.factors + tuple((a, -e) for a, e in other.factors))

    def order_key(self):
        """Graded-lex key: total degree, then exponents on descending atoms."""
        desc = tuple(
            (a.sort_key(), e)
            for a, e in sorted(self.factors, key=lambda p: p[0].sort_key(), reverse=True)
        )
        return (self.degree, desc)


# ---------------------------------------------------------------------------
# Expressions


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficient must be exact rational, got {type(c).__name__}")


class Expression:
    """Immutable normal-form polynomial over atoms with rational coefficients."""

    __slots__ = ("ctx", "terms", "_key", "_hash")

    def __init__(self, ctx: Context, terms: dict):
        self.ctx = ctx
        self.terms = {m: c for m, c in terms.items() if c != 0}
        self._key = None
        self._hash = None

    # -- construction ------------------------------------------------------

    @staticmethod
    def zero(ctx: Context) -> "Expression":
        return Expression(ctx, {})

    @staticmethod
    def const(ctx: Context, c) -> "Expression":
        return Expression(ctx, {Monomial.unit(): _as_fraction(c)})

    @staticmethod
    def from_atom(ctx: Context, atom) -> "Expression":
        return Expression(ctx, {Monomial.of([(atom, 1)]): Fraction(1)})

    # -- identity ----------------------------------------------------------

    def key(self):
        if self._key is None:
            self._key = tuple(
                sorted(
                    (m.order_key(), (c.numerator, c.denominator))
                    for m, c in self.terms.items()
                )
            )
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Expression):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self):
        return f"Expression({self.to_text()})"

    # -- arithmetic --------------------------------------------------------

    def _check(self, other: "Expression"):
        if self.ctx != other.ctx:
            raise ContextMismatchError("expressions belong to different contexts")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expression.const(self.ctx, other)
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Expression(self.ctx, terms)

    __radd__ = __add__

    def __neg__(self):
        return Expression(self.ctx, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expression.const(self.ctx, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            return Expression(self.ctx, {m: c * v for m, v in self.terms.items()})
        self._check(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return Expression(self.ctx, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers of expressions are not supported")
        out = Expression.const(self.ctx, 1)
        for _ in range(n):
            out = out * self
        return out

    @property
    def is_zero_form(self) -> bool:
        return not self.terms

    # -- inspection --------------------------------------------------------

    def atoms(self, recurse_functions: bool = True):
        """All distinct atoms; optionally including those inside function args."""
        seen = []
        found = set()

        def visit(e: "Expression"):
            for m in e.terms:
                for a, _ in m.factors:
                    if a not in found:
                        found.add(a)
                        seen.append(a)
                    if recurse_functions and isinstance(a, FuncAtom):
                        visit(a.arg)

        visit(self)
        return seen

    def jet_atoms(self, dep: DependentVar = None):
        out = []
        for a in self.atoms(recurse_functions=True):
            if isinstance(a, JetAtom) and (dep is None or a.coord.dep == dep):
                out.append(a)
        return out

    def max_order(self, dep: DependentVar = None) -> int:
        orders = [a.coord.order for a in self.jet_atoms(dep)]
        return max(orders, default=0)

    def leading(self):
        """(monomial, coefficient) maximal under the canonical monomial order."""
        if not self.terms:
            raise ValueError("zero expression has no leading term")
        m = max(self.terms, key=Monomial.order_key)
        return m, self.terms[m]

    def coefficient_of(self, atom) -> "Expression":
        """Formal first-order coefficient: d(self)/d(atom) restricted to linear use."""
        terms = {}
        for m, c in self.terms.items():
            exps = dict(m.factors)
            if exps.get(atom, 0) == 1:
                rest = Monomial.of([(a, e) for a, e in m.factors if a != atom])
                terms[rest] = terms.get(rest, Fraction(0)) + c
        return Expression(self.ctx, terms)

    def degree_in(self, atom) -> int:
        d = 0
        for m in self.terms:
            d = max(d, dict(m.factors).get(atom, 0))
        return d

    # -- rendering ---------------------------------------------------------

    def to_text(self) -> str:
        from conslaw.render import render_text

        return render_text(self)

    def to_json_terms(self):
        from conslaw.render import render_json_terms

        return render_json_terms(self)


# ---------------------------------------------------------------------------
# Convenience constructors


def ivar(ctx: Context, name: str) -> Expression:
    return Expression.from_atom(ctx, VarAtom(ctx.independent(name)))


def jet(ctx: Context, dep_name: str, *ivar_names) -> Expression:
    return Expression.from_atom(ctx, JetAtom(ctx.coordinate(dep_name, *ivar_names)))


def func(head: str, arg: Expression) -> Expression:
    return Expression.from_atom(arg.ctx, FuncAtom(head, arg))


def const(ctx: Context, num, den=1) -> Expression:
    return Expression.const(ctx, Fraction(num, den))


# ---------------------------------------------------------------------------
# Substitution


def substitute(e: Expression, bindings: dict) -> Expression:
    """Replace order-0 jet atoms and independent-variable atoms.

    Derivative coordinates of a bound dependent variable are rewritten
    first by total differentiation of the binding; such bindings must be
    free of jet atoms so their total derivatives close over the
    independent variables.
    """
    from conslaw.diffops import apply_multi_derivative

    for atom in bindings:
        if isinstance(atom, JetAtom):
            if atom.coord.order != 0:
                raise SubstitutionError(
                    "cannot bind a derivative coordinate directly; bind the "
                    "dependent variable and let differentiation rewrite it"
                )
        elif not isinstance(atom, VarAtom):
            raise SubstitutionError("bindings must target variables, not functions")

    expanded = dict(bindings)
    bound_deps = {a.coord.dep: b for a, b in bindings.items() if isinstance(a, JetAtom)}
    for a in e.atoms(recurse_functions=True):
        if isinstance(a, JetAtom) and a.coord.order > 0 and a.coord.dep in bound_deps:
            repl = bound_deps[a.coord.dep]
            if repl.jet_atoms():
                raise SubstitutionError(
                    f"binding for {a.coord.dep.name!r} contains jet atoms while "
                    "derivative coordinates of it remain"
                )
            expanded[a] = apply_multi_derivative(repl, a.coord.index)

    return _replace_atoms(e, expanded)


def _replace_atoms(e: Expression, table: dict) -> Expression:
    out = Expression.zero(e.ctx)
    for m, c in e.terms.items():
        term = Expression.const(e.ctx, c)
        for atom, exp in m.factors:
            if isinstance(atom, FuncAtom):
                base = func(atom.head, _replace_atoms(atom.arg, table))
            elif atom in table:
                base = table[atom]
            else:
                base = Expression.from_atom(e.ctx, atom)
            if exp < 0:
                # negative powers only on independent-variable atoms
                if atom in table or isinstance(atom, FuncAtom):
                    raise SubstitutionError("cannot substitute under a negative power")
                term = term * Expression(
                    e.ctx, {Monomial.of([(atom, exp)]): Fraction(1)}
                )
            else:
                term = term * base ** exp
        out = out + term
    return out


# ---------------------------------------------------------------------------
# Numeric evaluation and the random-point oracle


def _eval_atom(atom, point, stats):
    if isinstance(atom, FuncAtom):
        v = _eval_terms(atom.arg, point, stats)
        return _MATH_FN[atom.head](v)
    try:
        return point[atom]
    except KeyError:
        name = atom.var.name if isinstance(atom, VarAtom) else atom.coord.dep.name
        raise MissingAssignmentError(f"no value assigned for atom of {name!r}") from None


def _eval_terms(e: Expression, point, stats) -> float:
    total = 0.0
    for m, c in e.terms.items():
        v = float(c)
        for atom, exp in m.factors:
            v *= _eval_atom(atom, point, stats) ** exp
        stats[0] = max(stats[0], abs(v))
        total += v
    return total


def eval_numeric(e: Expression, point: dict) -> float:
    """IEEE double value of the polynomial at a point assigning every atom."""
    return _eval_terms(e, point, [0.0])


def _denominator_atoms(e: Expression):
    """Atoms whose sampled values must stay away from zero."""
    out = set()

    def visit(x: Expression):
        for m in x.terms:
            for a, exp in m.factors:
                if isinstance(a, FuncAtom):
                    if a.head == "log":
                        out.update(
                            b for b in a.arg.atoms() if not isinstance(b, FuncAtom)
                        )
                    visit(a.arg)
                elif exp < 0:
                    out.add(a)

    visit(e)
    return out


def sample_point(e: Expression, rng: random.Random, bound: float = 2.0) -> dict:
    """Uniform point in [-bound, bound] per atom, denominators kept off zero."""
    guarded = _denominator_atoms(e)
    atoms = [a for a in e.atoms(recurse_functions=True) if not isinstance(a, FuncAtom)]
    atoms.sort(key=lambda a: a.sort_key())
    point = {}
    for a in atoms:
        v = rng.uniform(-bound, bound)
        while a in guarded and abs(v) < 1e-3:
            v = rng.uniform(-bound, bound)
        point[a] = v
    return point


class ZeroStatus(enum.Enum):
    ZERO = "Zero"
    NUMERICALLY_ZERO = "NumericallyZero"
    NON_ZERO = "NonZero"


def is_zero(e: Expression, points: int = 20, tol: float = 1e-8, seed: int = 0) -> ZeroStatus:
    """Structural zero test with a random-point numeric fallback.

    A non-empty normal form is sampled at `points` seeded random points;
    all residuals below tol * (1 + max intermediate magnitude) means the
    expression is zero up to identities the normal form does not know.
    """
    if e.is_zero_form:
        return ZeroStatus.ZERO
    rng = random.Random(seed)
    for _ in range(points):
        point = sample_point(e, rng)
        stats = [0.0]
        v = _eval_terms(e, point, stats)
        if abs(v) > tol * (1.0 + stats[0]):
            return ZeroStatus.NON_ZERO
    return ZeroStatus.NUMERICALLY_ZERO


def max_residual(e: Expression, points: int = 20, tol: float = 1e-8, seed: int = 0):
    """(max scaled residual, pass flag) over seeded sample points."""
    if e.is_zero_form:
        return 0.0, True
    rng = random.Random(seed)
    worst = 0.0
    ok = True
    for _ in range(points):
        point = sample_point(e, rng)
        stats = [0.0]
        v = _eval_terms(e, point, stats)
        scaled = abs(v) / (1.0 + stats[0])
        worst = max(worst, scaled)
        if abs(v) > tol * (1.0 + stats[0]):
            ok = False
    return worst, ok


# ---------------------------------------------------------------------------
# Exact division


def exact_divide(num: Expression, den: Expression) -> Expression:
    """Quotient q with q * den == num exactly, by leading-term elimination.

    Raises NotDivisibleError as soon as a leading term fails to reduce;
    the corpus divisors are linear in their leading jet coordinate, so
    single-divisor reduction terminates.
    """
    if den.is_zero_form:
        raise ZeroDivisionError("exact_divide by zero expression")
    num._check(den)
    lm, lc = den.leading()
    q = Expression.zero(num.ctx)
    r = num
    while not r.is_zero_form:
        rm, rc = r.leading()
        if not lm.divides(rm):
            raise NotDivisibleError("nonzero remainder in exact division")
        t = Expression(num.ctx, {rm.divide(lm): rc / lc})
        q = q + t
        r = r - t * den
    return q
