"""Deterministic text / JSON rendering of expressions.

Text uses functional derivative notation, e.g. ``2*t*D(v,x) - x*v``;
parse(render(e)) round-trips exactly.  JSON renders the term list with
string fractions so the round-trip is bit-exact.
"""

from __future__ import annotations

from fractions import Fraction

from conslaw.expr import Expression, FuncAtom, JetAtom, Monomial, VarAtom


def _render_atom_key(ctx):
    """Display order: variant, dependent position, then counts weighted
    toward later-declared independents (so D(v,t) prints before D(v,x,x))."""

    def key(atom):
        if isinstance(atom, VarAtom):
            return (0, atom.var.position)
        if isinstance(atom, JetAtom):
            c = atom.coord
            return (1, c.dep.position, tuple(reversed(c.index.counts)))
        return (2, atom.head, atom.arg.key())

    return key


def _term_sort_key(ctx):
    akey = _render_atom_key(ctx)

    def key(item):
        m, _ = item
        desc = tuple(
            (akey(a), e) for a, e in sorted(m.factors, key=lambda p: akey(p[0]), reverse=True)
        )
        return (m.degree, desc)

    return key


def _jet_text(atom: JetAtom, ctx) -> str:
    c = atom.coord
    if c.index.order == 0:
        return c.dep.name
    parts = [c.dep.name]
    for iv, n in zip(ctx.independents, c.index.counts):
        parts.extend([iv.name] * n)
    return "D(" + ",".join(parts) + ")"


def _factor_text(atom, exp, ctx) -> str:
    if isinstance(atom, VarAtom):
        base = atom.var.name
    elif isinstance(atom, JetAtom):
        base = _jet_text(atom, ctx)
    else:
        base = f"{atom.head}({render_text(atom.arg)})"
    if exp == 1:
        return base
    return f"{base}^{exp}"


def _monomial_text(m: Monomial, ctx) -> str:
    akey = _render_atom_key(ctx)
    factors = sorted(m.factors, key=lambda p: akey(p[0]))
    return "*".join(_factor_text(a, e, ctx) for a, e in factors)


def render_text(e: Expression) -> str:
    if e.is_zero_form:
        return "0"
    items = sorted(e.terms.items(), key=_term_sort_key(e.ctx), reverse=True)
    out = []
    for i, (m, c) in enumerate(items):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = _monomial_text(m, e.ctx)
        if not body:
            piece = str(mag)
        elif mag == 1:
            piece = body
        else:
            piece = f"{mag}*{body}"
        if i == 0:
            out.append(piece if sign == "+" else "-" + piece)
        else:
            out.append(f" {sign} {piece}")
    return "".join(out)


def render_operator(op, ctx) -> str:
    """Linear differential operator as e.g. ``(1/2*x) + (t)*D[x]``."""
    if not op.terms:
        return "0"
    parts = []
    for index, coeff in op.terms:
        body = f"({render_text(coeff)})"
        if index.order:
            names = []
            for iv, n in zip(ctx.independents, index.counts):
                names.extend([iv.name] * n)
            body += f"*D[{','.join(names)}]"
        parts.append(body)
    return " + ".join(parts)


def _atom_json(atom, ctx):
    if isinstance(atom, VarAtom):
        return {"kind": "ivar", "name": atom.var.name}
    if isinstance(atom, JetAtom):
        c = atom.coord
        seq = []
        for iv, n in zip(ctx.independents, c.index.counts):
            seq.extend([iv.name] * n)
        return {"kind": "jet", "dep": c.dep.name, "index": seq}
    return {
        "kind": "func",
        "head": atom.head,
        "arg": render_json_terms(atom.arg),
    }


def render_json_terms(e: Expression):
    """Array of {coeff, monomial} in canonical display order."""
    items = sorted(e.terms.items(), key=_term_sort_key(e.ctx), reverse=True)
    out = []
    for m, c in items:
        akey = _render_atom_key(e.ctx)
        factors = sorted(m.factors, key=lambda p: akey(p[0]))
        out.append(
            {
                "coeff": str(c),
                "monomial": [
                    {"atom": _atom_json(a, e.ctx), "power": exp} for a, exp in factors
                ],
            }
        )
    return out


def parse_json_terms(data, ctx) -> Expression:
    """Inverse of render_json_terms."""
    from conslaw.expr import Monomial as M

    terms = {}
    for entry in data:
        coeff = Fraction(entry["coeff"])
        pairs = []
        for f in entry["monomial"]:
            a = f["atom"]
            if a["kind"] == "ivar":
                atom = VarAtom(ctx.independent(a["name"]))
            elif a["kind"] == "jet":
                atom = JetAtom(ctx.coordinate(a["dep"], *a["index"]))
            else:
                atom = FuncAtom(a["head"], parse_json_terms(a["arg"], ctx))
            pairs.append((atom, f["power"]))
        m = M.of(pairs)
        terms[m] = terms.get(m, Fraction(0)) + coeff
    return Expression(ctx, terms)
