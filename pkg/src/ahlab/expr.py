"""Coordinate expression language used for metric and almost complex structure entries.

Grammar (whitespace insignificant)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | '+' unary | power
    power    := atom ('^' exponent)?
    exponent := '-' exponent | '+' exponent | power
    atom     := NUMBER | VAR | CONST | FUNC '(' expr ')' | '(' expr ')'

``VAR`` is ``x1``, ``x2``, ... (1-based), ``CONST`` is ``pi`` or ``e`` and
``FUNC`` is one of sin, cos, tan, exp, log, sqrt, atan.  ``^`` binds tighter
than unary minus, so ``-x1^2`` is ``-(x1^2)``, and it is right-associative.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union

GRAMMAR_VERSION = "1"

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "atan")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, offset: int, text: str = ""):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset, text)


class VariableRangeError(ExprSyntaxError):
    def __init__(self, index: int, dim: int, offset: int, text: str = ""):
        self.index = index
        self.dim = dim
        super().__init__(f"variable x{index} out of range for dimension {dim}", offset, text)


# --- AST -------------------------------------------------------------------


class Expr:
    """Base node.  Nodes are immutable and compare structurally."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, other):
        return Pow(self, as_expr(other))

    def __neg__(self):
        return Neg(self)

    def __str__(self):
        return pretty_print(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True, eq=True)
class Const(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Expr


@dataclass(frozen=True, eq=True)
class Func(Expr):
    name: str
    arg: Expr


# convenience constructors matching node names used in docs/tests
def Sin(a: Expr) -> Func:
    return Func("sin", a)


def Cos(a: Expr) -> Func:
    return Func("cos", a)


def Tan(a: Expr) -> Func:
    return Func("tan", a)


def Exp(a: Expr) -> Func:
    return Func("exp", a)


def Log(a: Expr) -> Func:
    return Func("log", a)


def Sqrt(a: Expr) -> Func:
    return Func("sqrt", a)


def Atan(a: Expr) -> Func:
    return Func("atan", a)


BINARY = (Add, Sub, Mul, Div)


def as_expr(value: Union[Expr, int, float]) -> Expr:
    """Wrap a Python number as a node; negative numbers become ``Neg(Num)``."""
    if isinstance(value, Expr):
        return value
    v = float(value)
    if not math.isfinite(v):
        raise ExprError(f"non-finite literal {value!r}")
    if v < 0 or (v == 0 and math.copysign(1.0, v) < 0):
        return Neg(Num(-v))
    return Num(v)


def x(i: int) -> Var:
    """Coordinate variable ``x{i}`` (1-based)."""
    return Var(i)


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, BINARY):
            stack.extend((node.right, node.left))
        elif isinstance(node, Pow):
            stack.extend((node.exponent, node.base))
        elif isinstance(node, (Neg, Func)):
            stack.append(node.arg)


def max_var_index(e: Expr) -> int:
    return max((n.index for n in walk(e) if isinstance(n, Var)), default=0)


def is_constant(e: Expr) -> bool:
    return not any(isinstance(n, Var) for n in walk(e))


def shift_vars(e: Expr, offset: int, _memo: Optional[dict] = None) -> Expr:
    """Return ``e`` with every ``x{i}`` renamed to ``x{i+offset}``.  Shared subtrees stay shared."""
    if offset == 0:
        return e
    memo = {} if _memo is None else _memo
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Var):
        out: Expr = Var(e.index + offset)
    elif isinstance(e, (Num, Const)):
        out = e
    elif isinstance(e, Neg):
        out = Neg(shift_vars(e.arg, offset, memo))
    elif isinstance(e, Func):
        out = Func(e.name, shift_vars(e.arg, offset, memo))
    elif isinstance(e, Pow):
        out = Pow(shift_vars(e.base, offset, memo), shift_vars(e.exponent, offset, memo))
    else:
        out = type(e)(shift_vars(e.left, offset, memo), shift_vars(e.right, offset, memo))
    memo[key] = out
    return out


# --- tokenizer / parser ----------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VAR = re.compile(r"x([1-9]\d*)$")


class _Parser:
    def __init__(self, text: str, dim: Optional[int]):
        self.text = text
        self.dim = dim
        self.tokens = []  # (kind, value, offset)
        pos = 0
        while pos < len(text):
            mt = _TOKEN.match(text, pos)
            if mt is None:
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
            kind = mt.lastgroup
            if kind != "ws":
                self.tokens.append((kind, mt.group(), pos))
            pos = mt.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, off = self.take()
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off, self.text)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off, self.text)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def exponent(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.exponent())
        if kind == "op" and val == "+":
            self.take()
            return self.exponent()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            mv = _VAR.match(val)
            if mv:
                idx = int(mv.group(1))
                if self.dim is not None and idx > self.dim:
                    raise VariableRangeError(idx, self.dim, off, self.text)
                return Var(idx)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(val, arg)
            raise UnknownIdentifierError(val, off, self.text)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else f"token {val!r}"
        raise ExprSyntaxError(f"unexpected {what}", off, self.text)


def parse(text: str, dim: Optional[int] = None) -> Expr:
    """Parse ``text`` into an AST.

    If ``dim`` is given, variables beyond ``x{dim}`` are rejected.
    """
    return _Parser(text, dim).parse()


# --- printer ---------------------------------------------------------------

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _prec(e: Expr) -> int:
    return _PREC.get(type(e), 5)


def _fmt_num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def pretty_print(e: Expr) -> str:
    """Minimal-parenthesis rendering that parses back to an equal tree."""
    parts: list = []
    _emit(e, parts, {})
    return "".join(parts)


def _emit(e: Expr, out: list, memo: dict) -> None:
    # memo caches rendered shared subtrees (model metrics reuse nodes heavily)
    key = id(e)
    if key in memo:
        out.append(memo[key])
        return
    start = len(out)
    if isinstance(e, Num):
        if e.value < 0 or not math.isfinite(e.value):
            raise ExprError(f"cannot print literal {e.value!r}")
        out.append(_fmt_num(e.value))
    elif isinstance(e, Var):
        out.append(f"x{e.index}")
    elif isinstance(e, Const):
        out.append(e.name)
    elif isinstance(e, Func):
        out.append(e.name + "(")
        _emit(e.arg, out, memo)
        out.append(")")
    elif isinstance(e, Neg):
        out.append("-")
        _wrap(e.arg, _prec(e.arg) < 3, out, memo)
    elif isinstance(e, Pow):
        _wrap(e.base, _prec(e.base) <= 4, out, memo)
        out.append("^")
        _wrap(e.exponent, _prec(e.exponent) < 3, out, memo)
    else:
        p = _PREC[type(e)]
        _wrap(e.left, _prec(e.left) < p, out, memo)
        out.append(f" {_SYMBOL[type(e)]} ")
        _wrap(e.right, _prec(e.right) <= p, out, memo)
    memo[key] = "".join(out[start:])
    del out[start:]
    out.append(memo[key])


def _wrap(e: Expr, paren: bool, out: list, memo: dict) -> None:
    if paren:
        out.append("(")
    _emit(e, out, memo)
    if paren:
        out.append(")")
