"""Tiny expression language for one-variable formulas.

Grammar (loosest binding first): ``+ -`` then ``* /`` then unary minus,
then right-associative ``^``. Atoms are decimal literals, the variable
``s``, parenthesised expressions and calls to a fixed set of functions:
ln, exp, abs, sin, cos, atan, sqrt, sign (one argument) and min, max
(two arguments). ``sign(0)`` is 0.

Parsing produces a small immutable AST; :func:`format_expr` renders an
AST back to text with minimal parentheses so that
``parse_expr(format_expr(e)) == e``.

Evaluation accepts a float or a numpy array. Expressions are compiled
once per AST to plain Python closures; :func:`eval_expr_reference` is a
slow tree-walking evaluator kept for cross-checking the compiler.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "ExprNameError",
    "ExprDomainError",
    "parse_expr",
    "format_expr",
    "eval_expr",
    "eval_expr_reference",
]

UNARY_FUNCTIONS = ("ln", "exp", "abs", "sin", "cos", "atan", "sqrt", "sign")
BINARY_FUNCTIONS = ("min", "max")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprNameError(ExprError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} (at offset {offset})")
        self.name = name
        self.offset = offset


class ExprDomainError(ExprError):
    """Evaluation hit an undefined value (ln of a non-positive number,
    division by zero, fractional power of a negative base, overflow).

    Carries the input ``s`` and the text of the offending subexpression.
    """

    def __init__(self, detail: str, where: str, s):
        super().__init__(f"{detail} in {where!r} at s={s!r}")
        self.detail = detail
        self.where = where
        self.s = s


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ExprError(f"literal must be finite, got {self.value!r}")


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in ("+", "-", "*", "/", "^"):
            raise ExprError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple

    def __post_init__(self):
        if self.func in UNARY_FUNCTIONS:
            arity = 1
        elif self.func in BINARY_FUNCTIONS:
            arity = 2
        else:
            raise ExprError(f"unknown function {self.func!r}")
        if len(self.args) != arity:
            raise ExprError(f"{self.func} takes {arity} argument(s), got {len(self.args)}")


Expr = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
  | (?P<ws>[ \t\r\n]+)
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.peek()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}", pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.sum_()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos)
        return e

    def sum_(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            self.advance()
            # exponent parsed at unary level: 2^-3 is 2^(-3), 2^3^2 nests right
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            if text == "s":
                return Var()
            if text in UNARY_FUNCTIONS or text in BINARY_FUNCTIONS:
                self.expect("(")
                args = [self.sum_()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.sum_())
                self.expect(")")
                try:
                    return Call(text, tuple(args))
                except ExprError as exc:
                    raise ExprSyntaxError(str(exc), pos) from None
            raise ExprNameError(text, pos)
        if text == "(":
            e = self.sum_()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected token {text!r}" if text else "unexpected end of input", pos)


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing

def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def format_expr(e: Expr) -> str:
    if isinstance(e, Num):
        v = e.value
        # integral literals print without the trailing .0 (parses identically)
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(e, Var):
        return "s"
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        if _prec(e.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Call):
        return f"{e.func}({','.join(format_expr(a) for a in e.args)})"
    if isinstance(e, BinOp):
        lhs, rhs = format_expr(e.left), format_expr(e.right)
        p = _prec(e)
        if e.op == "^":
            if _prec(e.left) <= p:
                lhs = f"({lhs})"
            if _prec(e.right) < p:
                rhs = f"({rhs})"
        else:
            if _prec(e.left) < p:
                lhs = f"({lhs})"
            if _prec(e.right) <= p:
                rhs = f"({rhs})"
        return f"{lhs}{e.op}{rhs}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# evaluation

class _DomainSignal(Exception):
    def __init__(self, detail: str, where: str):
        self.detail = detail
        self.where = where


def _guard_ln(x, where):
    if x <= 0.0:
        raise _DomainSignal("ln of non-positive argument", where)
    return math.log(x)


def _guard_sqrt(x, where):
    if x < 0.0:
        raise _DomainSignal("sqrt of negative argument", where)
    return math.sqrt(x)


def _guard_div(a, b, where):
    if b == 0.0:
        raise _DomainSignal("division by zero", where)
    return a / b


def _guard_pow(a, b, where):
    if a == 0.0 and b < 0.0:
        raise _DomainSignal("zero raised to a negative power", where)
    if a < 0.0 and b != math.floor(b):
        raise _DomainSignal("fractional power of a negative base", where)
    try:
        return a ** b
    except OverflowError:
        raise _DomainSignal("overflow", where) from None


def _guard_exp(x, where):
    try:
        return math.exp(x)
    except OverflowError:
        raise _DomainSignal("overflow", where) from None


def _sign(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


_SCALAR_ENV = {
    "__builtins__": {},
    "_ln": _guard_ln,
    "_sqrt": _guard_sqrt,
    "_div": _guard_div,
    "_pow": _guard_pow,
    "_exp": _guard_exp,
    "_sin": math.sin,
    "_cos": math.cos,
    "_atan": math.atan,
    "_abs": math.fabs,
    "_min": min,
    "_max": max,
    "_sign": _sign,
}

_ARRAY_ENV = {
    "__builtins__": {},
    "_np": np,
    "_ln": np.log,
    "_sqrt": np.sqrt,
    "_exp": np.exp,
    "_sin": np.sin,
    "_cos": np.cos,
    "_atan": np.arctan,
    "_abs": np.abs,
    "_min": np.minimum,
    "_max": np.maximum,
    "_sign": np.sign,
}

_CALL_NAMES = {
    "ln": "_ln",
    "exp": "_exp",
    "sqrt": "_sqrt",
    "sin": "_sin",
    "cos": "_cos",
    "atan": "_atan",
    "abs": "_abs",
    "min": "_min",
    "max": "_max",
    "sign": "_sign",
}


def _gen_scalar(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "s"
    if isinstance(e, Neg):
        return f"(-{_gen_scalar(e.operand)})"
    if isinstance(e, BinOp):
        l, r = _gen_scalar(e.left), _gen_scalar(e.right)
        if e.op == "/":
            return f"_div({l},{r},{format_expr(e)!r})"
        if e.op == "^":
            return f"_pow({l},{r},{format_expr(e)!r})"
        return f"({l}{e.op}{r})"
    if isinstance(e, Call):
        args = ",".join(_gen_scalar(a) for a in e.args)
        if e.func in ("ln", "sqrt", "exp"):
            return f"{_CALL_NAMES[e.func]}({args},{format_expr(e)!r})"
        return f"{_CALL_NAMES[e.func]}({args})"
    raise TypeError(f"not an expression node: {e!r}")


def _gen_array(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "s"
    if isinstance(e, Neg):
        return f"(-{_gen_array(e.operand)})"
    if isinstance(e, BinOp):
        l, r = _gen_array(e.left), _gen_array(e.right)
        if e.op == "^":
            return f"({l}**{r})"
        return f"({l}{e.op}{r})"
    if isinstance(e, Call):
        args = ",".join(_gen_array(a) for a in e.args)
        return f"{_CALL_NAMES[e.func]}({args})"
    raise TypeError(f"not an expression node: {e!r}")


@lru_cache(maxsize=None)
def _scalar_fn(e: Expr):
    return eval(f"lambda s: {_gen_scalar(e)}", dict(_SCALAR_ENV))  # noqa: S307 - source built from our own AST


@lru_cache(maxsize=None)
def _array_fn(e: Expr):
    return eval(f"lambda s: {_gen_array(e)}", dict(_ARRAY_ENV))  # noqa: S307 - source built from our own AST


def eval_expr(e: Expr, s):
    """Evaluate ``e`` at ``s`` (float or ndarray).

    Array evaluation validates the result instead of each step: any
    non-finite output produced from finite input raises
    :class:`ExprDomainError` naming the first offending entry.
    """
    if isinstance(s, np.ndarray):
        with np.errstate(all="ignore"):
            out = _array_fn(e)(s)
        out = np.asarray(out, dtype=float)
        if out.shape != s.shape:
            out = np.broadcast_to(out, s.shape).copy()
        bad = ~np.isfinite(out) & np.isfinite(s)
        if np.any(bad):
            s_bad = float(s[bad].flat[0])
            raise ExprDomainError("non-finite value", format_expr(e), s_bad)
        return out
    x = float(s)
    try:
        return float(_scalar_fn(e)(x))
    except _DomainSignal as sig:
        raise ExprDomainError(sig.detail, sig.where, x) from None


def eval_expr_reference(e: Expr, s: float) -> float:
    """Tree-walking scalar evaluator, used to cross-check the compiled path."""
    x = float(s)

    def rec(node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return x
        if isinstance(node, Neg):
            return -rec(node.operand)
        if isinstance(node, BinOp):
            a = rec(node.left)
            if node.op == "^":
                return _guard_pow(a, rec(node.right), format_expr(node))
            b = rec(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return _guard_div(a, b, format_expr(node))
        if isinstance(node, Call):
            args = [rec(a) for a in node.args]
            if node.func in ("ln", "sqrt", "exp"):
                fn = {"ln": _guard_ln, "sqrt": _guard_sqrt, "exp": _guard_exp}[node.func]
                return fn(args[0], format_expr(node))
            return _SCALAR_ENV[_CALL_NAMES[node.func]](*args)
        raise TypeError(f"not an expression node: {node!r}")

    try:
        return float(rec(e))
    except _DomainSignal as sig:
        raise ExprDomainError(sig.detail, sig.where, x) from None
