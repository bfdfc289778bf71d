"""Symbol universe: variables, derivative multi-indices, jet coordinates.

Everything here is an immutable value; the canonical orderings fixed in
this module (variable positions, multi-index counts, coordinate order)
are what make normal forms elsewhere deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb, factorial

ORIGINAL = "original"
ADJOINT = "adjoint"


@dataclass(frozen=True)
class IndependentVar:
    name: str
    position: int


@dataclass(frozen=True)
class DependentVar:
    name: str
    position: int
    kind: str = ORIGINAL


@dataclass(frozen=True)
class MultiIndex:
    """Differentiation counts, one slot per independent variable.

    The counts tuple is aligned with the declaration order of the
    independent variables, so a MultiIndex is canonical by construction:
    D_xD_t and D_tD_x both land on the same counts.
    """

    counts: tuple

    @property
    def order(self) -> int:
        return sum(self.counts)

    def raised(self, position: int) -> "MultiIndex":
        c = list(self.counts)
        c[position] += 1
        return MultiIndex(tuple(c))

    def contains(self, other: "MultiIndex") -> bool:
        return all(a >= b for a, b in zip(self.counts, other.counts))

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(tuple(a + b for a, b in zip(self.counts, other.counts)))

    def __sub__(self, other: "MultiIndex") -> "MultiIndex":
        c = tuple(a - b for a, b in zip(self.counts, other.counts))
        if any(x < 0 for x in c):
            raise ValueError("multi-index subtraction went negative")
        return MultiIndex(c)

    def multiplicity(self) -> int:
        """Number of ordered differentiation sequences realizing this index."""
        m = factorial(self.order)
        for c in self.counts:
            m //= factorial(c)
        return m

    def split_pairs(self):
        """All canonical (S, R) with S + R == self."""
        ranges = [range(c + 1) for c in self.counts]
        out = []

        def rec(i, acc):
            if i == len(ranges):
                s = MultiIndex(tuple(acc))
                out.append((s, self - s))
                return
            for v in ranges[i]:
                rec(i + 1, acc + [v])

        rec(0, [])
        return out


@dataclass(frozen=True)
class JetCoordinate:
    dep: DependentVar
    index: MultiIndex

    @property
    def order(self) -> int:
        return self.index.order


@dataclass(frozen=True)
class Context:
    """Immutable declaration of the variable universe.

    All expressions reference exactly one context; operations check for
    context agreement before combining expressions.
    """

    independents: tuple
    dependents: tuple

    @staticmethod
    def build(independents, dependents, adjoints=()) -> "Context":
        ivars = tuple(
            IndependentVar(name, i) for i, name in enumerate(independents)
        )
        deps = [
            DependentVar(name, i, ORIGINAL) for i, name in enumerate(dependents)
        ]
        deps += [
            DependentVar(name, len(dependents) + i, ADJOINT)
            for i, name in enumerate(adjoints)
        ]
        names = [v.name for v in ivars] + [d.name for d in deps]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique within a context")
        return Context(ivars, tuple(deps))

    def independent(self, name: str) -> IndependentVar:
        for v in self.independents:
            if v.name == name:
                return v
        raise KeyError(f"no independent variable {name!r}")

    def dependent(self, name: str) -> DependentVar:
        for v in self.dependents:
            if v.name == name:
                return v
        raise KeyError(f"no dependent variable {name!r}")

    def originals(self):
        return tuple(d for d in self.dependents if d.kind == ORIGINAL)

    def adjoints(self):
        return tuple(d for d in self.dependents if d.kind == ADJOINT)

    def zero_index(self) -> MultiIndex:
        return MultiIndex((0,) * len(self.independents))

    def index_of(self, *ivar_names) -> MultiIndex:
        """Multi-index from a differentiation sequence, order immaterial."""
        counts = [0] * len(self.independents)
        for name in ivar_names:
            counts[self.independent(name).position] += 1
        return MultiIndex(tuple(counts))

    def coordinate(self, dep_name: str, *ivar_names) -> JetCoordinate:
        return JetCoordinate(self.dependent(dep_name), self.index_of(*ivar_names))


def canonicalize_index(index: MultiIndex) -> MultiIndex:
    """Canonical form of a multi-index; idempotent.

    The counts representation is already order-insensitive, so this
    validates and returns the index unchanged.
    """
    if any(c < 0 for c in index.counts):
        raise ValueError("differentiation counts must be non-negative")
    return index


def coordinate_sort_key(c: JetCoordinate):
    """Canonical total order: dependent position, total order, counts.

    Ties in total order break toward more differentiations in
    earlier-declared independent variables.
    """
    return (c.dep.position, c.index.order, tuple(-n for n in c.index.counts))


def enumerate_coordinates(ctx: Context, max_order: int):
    """All jet coordinates of order <= max_order, in canonical order."""
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    out = []
    for dep in ctx.dependents:
        for k in range(max_order + 1):
            for combo in combinations_with_replacement(ctx.independents, k):
                counts = [0] * len(ctx.independents)
                for v in combo:
                    counts[v.position] += 1
                out.append(JetCoordinate(dep, MultiIndex(tuple(counts))))
    return out


def coordinate_count(ctx: Context, max_order: int) -> int:
    """p * C(n + k, n) for p dependents, n independents, order k."""
    n = len(ctx.independents)
    return len(ctx.dependents) * comb(n + max_order, n)
