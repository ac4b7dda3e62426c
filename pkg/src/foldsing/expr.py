"""Expression AST, recursive-descent parser, symbolic derivative and compilation.

Grammar (whitespace insignificant)::

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' intlit)?
    atom  := number | ident | '(' expr ')' | func '(' expr ')'

``func`` is one of sin, cos, exp, log, sqrt, atan. The identifier ``pi`` is a
constant unless declared as a variable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ParseError, UndeclaredVariable

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "atan")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Neg, BinOp, Pow, Call]


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos, src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, variables: Iterable[str], aliases: Mapping[str, "Expression"]):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = frozenset(variables)
        self.aliases = dict(aliases)

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def _fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.offset, self.src)

    def _expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "number":
            what = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            self._fail(f"expected {text!r}, found {what}")
        return self._advance()

    def parse(self) -> Expression:
        if self.tok.kind == "eof":
            self._fail("empty expression")
        node = self.expr()
        if self.tok.kind != "eof":
            self._fail(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            tok = self.tok
            if tok.kind != "number":
                self._fail("exponent must be an integer literal")
            if not tok.text.isdigit():
                self._fail(f"exponent must be an integer literal, found {tok.text!r}")
            self._advance()
            return Pow(base, int(tok.text))
        return base

    def atom(self) -> Expression:
        tok = self.tok
        if tok.kind == "number":
            self._advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self._advance()
            name = tok.text
            if name in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(name, arg)
            if name in self.variables:
                return Var(name)
            if name in self.aliases:
                return self.aliases[name]
            if name == "pi":
                return Num(math.pi)
            declared = ", ".join(sorted(self.variables)) or "none"
            raise UndeclaredVariable(
                f"undeclared variable {name!r} (declared: {declared})", tok.offset, self.src
            )
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        what = "end of input" if tok.kind == "eof" else repr(tok.text)
        self._fail(f"unexpected {what}")


def parse_expression(
    src: str,
    variables: Iterable[str],
    aliases: Mapping[str, Expression] | None = None,
) -> Expression:
    """Parse `src` over the declared `variables`.

    `aliases` maps extra identifiers to fixed subexpressions (the CLI uses it
    to read ``ydot`` as ``p``).
    """
    return _Parser(src, variables, aliases or {}).parse()


# -- inspection --------------------------------------------------------------

def summands(e: Expression) -> list[Expression]:
    """Top-level terms of a sum; subtraction contributes a negated term."""
    if isinstance(e, BinOp) and e.op in "+-":
        right = e.right if e.op == "+" else Neg(e.right)
        return summands(e.left) + [right]
    return [e]


def free_variables(e: Expression) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, (Neg, Call)):
        return free_variables(e.arg)
    return free_variables(e.base)


def to_string(e: Expression) -> str:
    if isinstance(e, Num):
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"-({to_string(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    if isinstance(e, Pow):
        return f"({to_string(e.base)})^{e.exponent}"
    return f"{e.func}({to_string(e.arg)})"


# -- evaluation --------------------------------------------------------------

_MATH = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "log": math.log,
         "sqrt": math.sqrt, "atan": math.atan}


def evaluate(e: Expression, env: Mapping[str, float]) -> float:
    """Evaluate at a point with plain floats (raises ValueError off-domain)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(env[e.name])
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, BinOp):
        a, b = evaluate(e.left, env), evaluate(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, Pow):
        return evaluate(e.base, env) ** e.exponent
    return _MATH[e.func](evaluate(e.arg, env))


# -- symbolic derivative with light simplification ---------------------------

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(e: Expression, value: float) -> bool:
    return isinstance(e, Num) and e.value == value


def add(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return BinOp("+", a, b)


def sub(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return BinOp("-", a, b)


def neg(a: Expression) -> Expression:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expression, b: Expression) -> Expression:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expression, b: Expression) -> Expression:
    if _is(a, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    return BinOp("/", a, b)


def power(a: Expression, n: int) -> Expression:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Num):
        return Num(a.value ** n)
    return Pow(a, n)


def diff(e: Expression, var: str) -> Expression:
    """Symbolic partial derivative of `e` with respect to `var`."""
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(diff(e.arg, var))
    if isinstance(e, BinOp):
        da, db = diff(e.left, var), diff(e.right, var)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, e.right), mul(e.left, db))
        # (a/b)' = a'/b - a b'/b^2
        return sub(div(da, e.right), div(mul(e.left, db), power(e.right, 2)))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return ZERO
        return mul(mul(Num(float(e.exponent)), power(e.base, e.exponent - 1)), diff(e.base, var))
    inner = diff(e.arg, var)
    if _is(inner, 0.0):
        return ZERO
    a = e.arg
    if e.func == "sin":
        outer = Call("cos", a)
    elif e.func == "cos":
        outer = neg(Call("sin", a))
    elif e.func == "exp":
        outer = e
    elif e.func == "log":
        outer = div(ONE, a)
    elif e.func == "sqrt":
        outer = div(Num(0.5), e)
    else:
        outer = div(ONE, add(ONE, power(a, 2)))
    return mul(outer, inner)


def diff_multi(e: Expression, vars_: Sequence[str]) -> Expression:
    for v in vars_:
        e = diff(e, v)
    return e


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    return Call(e.func, substitute(e.arg, mapping))


# -- compilation -------------------------------------------------------------

def _source(e: Expression, names: Mapping[str, str], lib: str) -> str:
    if isinstance(e, Num):
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Var):
        return names[e.name]
    if isinstance(e, Neg):
        return f"(-{_source(e.arg, names, lib)})"
    if isinstance(e, BinOp):
        return f"({_source(e.left, names, lib)} {e.op} {_source(e.right, names, lib)})"
    if isinstance(e, Pow):
        return f"({_source(e.base, names, lib)} ** ({e.exponent}))"
    func = "arctan" if (lib == "_np" and e.func == "atan") else e.func
    return f"{lib}.{func}({_source(e.arg, names, lib)})"


def compile_expressions(
    exprs: Sequence[Expression], variables: Sequence[str], vectorized: bool = False
) -> Callable[..., tuple]:
    """Compile expressions into one function of the positional `variables`.

    The function returns a tuple of values. ``vectorized=True`` uses numpy so
    arguments may be arrays; otherwise the math module is used on floats.
    """
    names = {v: f"v_{v}" for v in variables}
    lib = "_np" if vectorized else "_m"
    body = ", ".join(_source(e, names, lib) for e in exprs)
    args = ", ".join(names[v] for v in variables)
    src = f"lambda {args}: ({body},)"
    return eval(src, {"_np": np, "_m": math})  # noqa: S307 - source generated from AST
