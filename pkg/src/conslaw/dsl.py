"""Problem-file parser and expression renderer.

Grammar (statements end with ';', '#' starts a comment):

    independent x t ;
    dependent u ;
    adjoint v ;
    equation heat : D(u,t) - D(u,x,x) = 0 leading D(u,t) ;
    generator scale : point { xi(x) = 2*t , phi(u) = -x*u } ;
    generator flow  : evolutionary { phi(u) = D(u,x,x) } ;
    solution s1 : v = x ;
    task adjoint ;
    task decompose1 scale ;

Derivatives are written functionally, D(u,x,x,t); rationals as p/q;
function atoms exp(...), sin(...), cos(...), log(...).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from conslaw import expr as ex
from conslaw.conservation import Equation, PdeSystem
from conslaw.expr import Expression
from conslaw.jetspace import Context
from conslaw.symmetry import Generator


class ParseError(ValueError):
    def __init__(self, message, line, col, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        suffix = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"line {line}, column {col}: {message}{suffix}")


@dataclass(frozen=True)
class Task:
    directive: str
    args: tuple = ()


@dataclass
class Problem:
    ctx: Context
    system: PdeSystem
    generators: dict = field(default_factory=dict)
    solutions: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)

    def generator(self, name: str) -> Generator:
        if name not in self.generators:
            raise KeyError(f"no generator named {name!r}")
        return self.generators[name]

    def solution(self, name: str) -> dict:
        if name not in self.solutions:
            raise KeyError(f"no solution named {name!r}")
        return self.solutions[name]


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[():;{}=,*+^/-])
    """,
    re.VERBOSE,
)

FUNCTION_HEADS = ("exp", "sin", "cos", "log")


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "ident", "punct", "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Cursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        t = self.peek()
        if t.text != text:
            raise ParseError(
                f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input",
                t.line,
                t.col,
                expected=(repr(text),),
            )
        return self.next()

    def expect_ident(self, what="identifier") -> _Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(
                f"found {t.text!r} where {what} was expected",
                t.line,
                t.col,
                expected=(what,),
            )
        return self.next()


# ---------------------------------------------------------------------------
# Expression parsing


class _ExprParser:
    def __init__(self, cur: _Cursor, ctx: Context):
        self.cur = cur
        self.ctx = ctx

    def parse(self) -> Expression:
        return self._sum()

    def _sum(self) -> Expression:
        e = self._product()
        while self.cur.peek().text in ("+", "-"):
            op = self.cur.next().text
            rhs = self._product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def _product(self) -> Expression:
        e = self._power()
        while self.cur.peek().text == "*":
            self.cur.next()
            e = e * self._power()
        return e

    def _power(self) -> Expression:
        if self.cur.peek().text == "-":
            self.cur.next()
            return -self._power()
        base = self._primary()
        if self.cur.peek().text == "^":
            self.cur.next()
            neg = False
            if self.cur.peek().text == "-":
                self.cur.next()
                neg = True
            t = self.cur.peek()
            if t.kind != "number":
                raise ParseError("exponent must be an integer", t.line, t.col)
            self.cur.next()
            n = int(t.text)
            if neg:
                return self._negative_power(base, n, t)
            return base ** n
        return base

    def _negative_power(self, base: Expression, n: int, tok: _Token) -> Expression:
        # negative powers are only meaningful on a single independent variable
        if len(base.terms) == 1:
            ((m, c),) = base.terms.items()
            if c == 1 and len(m.factors) == 1:
                atom, p = m.factors[0]
                if isinstance(atom, ex.VarAtom) and p == 1:
                    return Expression(
                        base.ctx, {ex.Monomial.of([(atom, -n)]): Fraction(1)}
                    )
        raise ParseError(
            "negative exponents apply only to a bare independent variable",
            tok.line,
            tok.col,
        )

    def _primary(self) -> Expression:
        t = self.cur.peek()
        if t.kind == "number":
            self.cur.next()
            num = int(t.text)
            if self.cur.peek().text == "/":
                self.cur.next()
                d = self.cur.peek()
                if d.kind != "number":
                    raise ParseError("denominator must be an integer", d.line, d.col)
                self.cur.next()
                return Expression.const(self.ctx, Fraction(num, int(d.text)))
            return Expression.const(self.ctx, num)
        if t.text == "(":
            self.cur.next()
            e = self._sum()
            self.cur.expect(")")
            return e
        if t.text == "D":
            return self._derivative()
        if t.kind == "ident" and t.text in FUNCTION_HEADS:
            self.cur.next()
            self.cur.expect("(")
            arg = self._sum()
            self.cur.expect(")")
            return ex.func(t.text, arg)
        if t.kind == "ident":
            self.cur.next()
            return self._resolve(t)
        raise ParseError(
            f"found {t.text!r}" if t.kind != "eof" else "unexpected end of input",
            t.line,
            t.col,
            expected=("number", "identifier", "'('", "'D'"),
        )

    def _derivative(self) -> Expression:
        t = self.cur.expect("D")
        self.cur.expect("(")
        dep = self.cur.expect_ident("dependent variable")
        try:
            self.ctx.dependent(dep.text)
        except KeyError:
            raise ParseError(
                f"{dep.text!r} is not a declared dependent variable", dep.line, dep.col
            ) from None
        names = []
        while self.cur.peek().text == ",":
            self.cur.next()
            iv = self.cur.expect_ident("independent variable")
            try:
                self.ctx.independent(iv.text)
            except KeyError:
                raise ParseError(
                    f"{iv.text!r} is not a declared independent variable",
                    iv.line,
                    iv.col,
                ) from None
            names.append(iv.text)
        self.cur.expect(")")
        if not names:
            raise ParseError(
                "derivative needs at least one differentiation variable", t.line, t.col
            )
        return ex.jet(self.ctx, dep.text, *names)

    def _resolve(self, t: _Token) -> Expression:
        try:
            return ex.ivar(self.ctx, t.text)
        except KeyError:
            pass
        try:
            return ex.jet(self.ctx, t.text)
        except KeyError:
            raise ParseError(
                f"{t.text!r} is not a declared variable", t.line, t.col
            ) from None


def parse_expression(text: str, ctx: Context) -> Expression:
    cur = _Cursor(_tokenize(text))
    e = _ExprParser(cur, ctx).parse()
    t = cur.peek()
    if t.kind != "eof":
        raise ParseError(f"trailing input {t.text!r}", t.line, t.col)
    return e


# ---------------------------------------------------------------------------
# Problem parsing

_DIRECTIVES = ("adjoint", "flux", "decompose1", "decompose2", "multiplier", "verify")

_KEYWORDS = frozenset(
    {"independent", "dependent", "adjoint", "equation", "generator",
     "solution", "task", "leading"}
)


def parse_problem(text: str) -> Problem:
    cur = _Cursor(_tokenize(text))
    independents = []
    dependents = []
    adjoints = []
    equations = []  # (name token, expr text span parsed later)
    ctx = None
    problem = None
    pending_equations = []

    def context_ready():
        nonlocal ctx
        if ctx is None:
            ctx = Context.build(independents, dependents, adjoints)
        return ctx

    generators = {}
    solutions = {}
    tasks = []

    while cur.peek().kind != "eof":
        head = cur.expect_ident("statement keyword")
        if head.text in ("independent", "dependent", "adjoint"):
            if ctx is not None:
                raise ParseError(
                    "variable declarations must precede equations and generators",
                    head.line,
                    head.col,
                )
            bucket = {
                "independent": independents,
                "dependent": dependents,
                "adjoint": adjoints,
            }[head.text]
            while cur.peek().kind == "ident" and cur.peek().text not in _KEYWORDS:
                bucket.append(cur.next().text)
            if not bucket:
                raise ParseError("expected at least one name", head.line, head.col)
            cur.expect(";")
        elif head.text == "equation":
            c = context_ready()
            name = cur.expect_ident("equation name").text
            cur.expect(":")
            body = _ExprParser(cur, c).parse()
            cur.expect("=")
            zero = cur.peek()
            if zero.text != "0":
                raise ParseError("equation must end in '= 0'", zero.line, zero.col)
            cur.next()
            lead_kw = cur.expect_ident("'leading'")
            if lead_kw.text != "leading":
                raise ParseError(
                    "equation requires a 'leading' clause", lead_kw.line, lead_kw.col
                )
            lead = _ExprParser(cur, c)._derivative()
            ((m, _),) = lead.terms.items()
            ((atom, _),) = m.factors
            pending_equations.append(Equation(name, body, atom.coord))
            cur.expect(";")
        elif head.text == "generator":
            c = context_ready()
            name = cur.expect_ident("generator name").text
            cur.expect(":")
            kind = cur.expect_ident("'point' or 'evolutionary'")
            if kind.text not in ("point", "evolutionary"):
                raise ParseError(
                    f"unknown generator kind {kind.text!r}",
                    kind.line,
                    kind.col,
                    expected=("point", "evolutionary"),
                )
            cur.expect("{")
            xi = {}
            phi = {}
            while True:
                kw = cur.expect_ident("'xi' or 'phi'")
                if kw.text not in ("xi", "phi"):
                    raise ParseError(
                        f"found {kw.text!r}", kw.line, kw.col, expected=("xi", "phi")
                    )
                if kw.text == "xi" and kind.text == "evolutionary":
                    raise ParseError(
                        "evolutionary generators take no xi coefficients",
                        kw.line,
                        kw.col,
                    )
                cur.expect("(")
                var = cur.expect_ident("variable name")
                cur.expect(")")
                cur.expect("=")
                e = _ExprParser(cur, c).parse()
                if kw.text == "xi":
                    try:
                        xi[c.independent(var.text)] = e
                    except KeyError:
                        raise ParseError(
                            f"{var.text!r} is not a declared independent variable",
                            var.line,
                            var.col,
                        ) from None
                else:
                    try:
                        phi[c.dependent(var.text)] = e
                    except KeyError:
                        raise ParseError(
                            f"{var.text!r} is not a declared dependent variable",
                            var.line,
                            var.col,
                        ) from None
                if cur.peek().text == ",":
                    cur.next()
                    continue
                break
            cur.expect("}")
            cur.expect(";")
            if kind.text == "point":
                generators[name] = Generator.point(c, xi=xi, phi=phi)
            else:
                generators[name] = Generator.evolutionary(c, phi)
        elif head.text == "solution":
            c = context_ready()
            name = cur.expect_ident("solution name").text
            cur.expect(":")
            binding = {}
            while True:
                var = cur.expect_ident("adjoint variable")
                try:
                    dv = c.dependent(var.text)
                except KeyError:
                    raise ParseError(
                        f"{var.text!r} is not a declared variable", var.line, var.col
                    ) from None
                if dv.kind != "adjoint":
                    raise ParseError(
                        f"{var.text!r} is not an adjoint variable", var.line, var.col
                    )
                cur.expect("=")
                binding[var.text] = _ExprParser(cur, c).parse()
                if cur.peek().text == ",":
                    cur.next()
                    continue
                break
            cur.expect(";")
            solutions[name] = binding
        elif head.text == "task":
            d = cur.expect_ident("directive")
            if d.text not in _DIRECTIVES:
                raise ParseError(
                    f"unknown task directive {d.text!r}",
                    d.line,
                    d.col,
                    expected=_DIRECTIVES,
                )
            args = []
            while cur.peek().kind in ("ident", "number"):
                args.append(cur.next().text)
            cur.expect(";")
            tasks.append(Task(d.text, tuple(args)))
        else:
            raise ParseError(
                f"unknown statement {head.text!r}",
                head.line,
                head.col,
                expected=(
                    "independent",
                    "dependent",
                    "adjoint",
                    "equation",
                    "generator",
                    "solution",
                    "task",
                ),
            )

    if not pending_equations:
        t = cur.peek()
        raise ParseError("problem declares no equations", t.line, t.col)
    c = context_ready()
    system = PdeSystem.of(c, pending_equations)
    problem = Problem(c, system, generators, solutions, tasks)
    # resolution check for task arguments naming generators / solutions
    for task in tasks:
        if task.directive in ("flux", "decompose1", "decompose2", "multiplier", "verify"):
            if not task.args:
                raise ParseError(f"task {task.directive} needs a generator name", 0, 0)
            if task.args[0] not in generators:
                raise ParseError(
                    f"task references undeclared generator {task.args[0]!r}", 0, 0
                )
        if task.directive == "multiplier" and (
            len(task.args) < 2 or task.args[1] not in solutions
        ):
            raise ParseError("task multiplier needs a declared solution name", 0, 0)
    return problem


# ---------------------------------------------------------------------------
# Rendering front end


def render(e: Expression, fmt: str = "text"):
    """Render an expression; text and json round-trip exactly."""
    from conslaw.render import render_json_terms, render_text

    if fmt == "text":
        return render_text(e)
    if fmt == "json":
        return render_json_terms(e)
    if fmt == "latex-like":
        return _latexish(e)
    raise ValueError(f"unknown format {fmt!r}")


def _latexish(e: Expression) -> str:
    text = render(e, "text")
    text = text.replace("*", " ")

    def repl(m):
        parts = m.group(1).split(",")
        return f"{parts[0]}_{{{''.join(parts[1:])}}}"

    return re.sub(r"D\(([^()]*)\)", repl, text)
