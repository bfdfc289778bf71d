"""Shared builders for the test suite."""

from fractions import Fraction

from conslaw import expr as ex
from conslaw.jetspace import Context


def heat_context() -> Context:
    return Context.build(["x", "t"], ["u"], ["v"])


JET_SEQS = [(), ("x",), ("t",), ("x", "x"), ("x", "t"), ("t", "t")]


def atom_pool(ctx, dep="u"):
    pool = [ex.ivar(ctx, v.name) for v in ctx.independents]
    pool += [ex.jet(ctx, dep, *seq) for seq in JET_SEQS]
    return pool


def random_expression(ctx, rng, max_terms=3, pool=None, allow_funcs=False):
    """Small random normal-form expression; may normalize to zero."""
    pool = pool or atom_pool(ctx)
    out = ex.Expression.zero(ctx)
    for _ in range(rng.randint(1, max_terms)):
        term = ex.const(ctx, Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        for _ in range(rng.randint(0, 2)):
            term = term * rng.choice(pool)
        if allow_funcs and rng.random() < 0.3:
            head = rng.choice(["sin", "cos", "exp"])
            arg = ex.ivar(ctx, "x") + ex.const(ctx, rng.randint(-2, 2))
            term = term * ex.func(head, arg)
        out = out + term
    return out


def random_nonzero(ctx, rng, **kw):
    for _ in range(50):
        e = random_expression(ctx, rng, **kw)
        if not e.is_zero_form:
            return e
    raise AssertionError("random generator kept producing zero")
