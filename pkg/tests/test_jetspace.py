"""Variable universe and multi-index bookkeeping."""

import pytest

from conslaw.jetspace import (
    Context,
    JetCoordinate,
    MultiIndex,
    canonicalize_index,
    coordinate_count,
    coordinate_sort_key,
    enumerate_coordinates,
)

from helpers import heat_context


def test_build_assigns_positions_and_kinds():
    ctx = Context.build(["x", "t"], ["u", "q"], ["v", "w"])
    assert [v.name for v in ctx.independents] == ["x", "t"]
    assert ctx.independent("t").position == 1
    assert [d.name for d in ctx.originals()] == ["u", "q"]
    assert [d.name for d in ctx.adjoints()] == ["v", "w"]
    assert ctx.dependent("w").position == 3


def test_duplicate_names_rejected():
    with pytest.raises(ValueError):
        Context.build(["x", "x"], ["u"])
    with pytest.raises(ValueError):
        Context.build(["x"], ["u"], ["u"])


def test_index_of_is_order_insensitive():
    ctx = heat_context()
    assert ctx.index_of("x", "t", "x") == ctx.index_of("t", "x", "x")
    assert ctx.index_of("x", "t", "x").counts == (2, 1)


def test_multi_index_arithmetic():
    a = MultiIndex((2, 1))
    b = MultiIndex((1, 1))
    assert (a + b).counts == (3, 2)
    assert (a - b).counts == (1, 0)
    assert a.order == 3
    assert a.raised(1).counts == (2, 2)
    assert a.contains(b)
    assert not b.contains(a)
    with pytest.raises(ValueError):
        b - a


def test_multiplicity_counts_ordered_sequences():
    assert MultiIndex((1, 1)).multiplicity() == 2  # xt and tx
    assert MultiIndex((2, 0)).multiplicity() == 1
    assert MultiIndex((2, 1)).multiplicity() == 3


def test_split_pairs_cover_all_decompositions():
    m = MultiIndex((1, 1))
    pairs = m.split_pairs()
    assert len(pairs) == 4
    for s, r in pairs:
        assert (s + r) == m
    # binomial identity: sum over splits of prod C(M_i, S_i) equals 2^order
    from math import comb, prod

    total = sum(
        prod(comb(mc, sc) for mc, sc in zip(m.counts, s.counts)) for s, _ in pairs
    )
    assert total == 2 ** m.order
    assert len(pairs) == (m.counts[0] + 1) * (m.counts[1] + 1)


def test_canonicalize_is_identity_on_counts():
    m = MultiIndex((0, 3))
    assert canonicalize_index(m) == m
    with pytest.raises(ValueError):
        canonicalize_index(MultiIndex((-1, 0)))


def test_coordinate_sort_order():
    ctx = heat_context()
    u = ctx.dependent("u")
    u0 = JetCoordinate(u, ctx.index_of())
    ux = JetCoordinate(u, ctx.index_of("x"))
    ut = JetCoordinate(u, ctx.index_of("t"))
    uxx = JetCoordinate(u, ctx.index_of("x", "x"))
    ordered = sorted([uxx, ut, u0, ux], key=coordinate_sort_key)
    assert ordered == [u0, ux, ut, uxx]


def test_enumerate_matches_count_formula():
    ctx = Context.build(["x", "t"], ["u"], ["v"])
    for k in range(4):
        coords = enumerate_coordinates(ctx, k)
        assert len(coords) == coordinate_count(ctx, k)
        assert len(set(coords)) == len(coords)
