"""Expressions over domain variables ``x<i>`` and jet variables ``D[a,b]u<j>``.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | ident | func '(' expr ')' | '(' expr ')'

Note that unary minus binds tighter than ``^``: ``-x1^2`` is ``(-x1)^2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")


class ExprError(ValueError):
    def __init__(self, msg: str, offset: int | None = None):
        self.offset = offset
        super().__init__(msg if offset is None else f"{msg} at offset {offset}")


class ParseError(ExprError):
    pass


class ExprDomainError(ExprError, ArithmeticError):
    pass


# --- AST -------------------------------------------------------------------


class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class XVar(Expr):
    index: int  # 1-based


@dataclass(frozen=True)
class Jet(Expr):
    alpha: tuple[int, ...]
    comp: int  # 1-based

    @property
    def order(self) -> int:
        return sum(self.alpha)


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


# --- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<jet>D\[\s*\d+(?:\s*,\s*\d+)*\s*\]u\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, n, m, K):
        self.toks = _tokens(text)
        self.i = 0
        self.n, self.m, self.K = n, m, K

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        kind, v, off = self.peek()
        if v != value or kind == "end":
            raise ParseError(f"expected {value!r}", off)
        return self.take()

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = Bin(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = Bin(op, left, self.factor())
        return left

    def factor(self):
        base = self.unary()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return Bin("^", base, self.factor())
        return base

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, v, off = self.peek()
        if kind == "num":
            self.take()
            return Num(float(v))
        if kind == "jet":
            self.take()
            alpha = tuple(int(a) for a in v[2 : v.index("]")].split(","))
            return self._jet(alpha, int(v[v.index("]") + 2 :]), off)
        if kind == "ident":
            self.take()
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(v, arg)
            mx = re.fullmatch(r"x(\d+)", v)
            if mx:
                idx = int(mx.group(1))
                if idx < 1 or (self.n is not None and idx > self.n):
                    raise ParseError(f"unknown domain variable {v!r}", off)
                return XVar(idx)
            mu = re.fullmatch(r"u(\d+)", v)
            if mu:
                alpha = (0,) * self.n if self.n is not None else ()
                return self._jet(alpha, int(mu.group(1)), off)
            raise ParseError(f"unknown identifier {v!r}", off)
        if v == "(" and kind == "op":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "end" else repr(v)
        raise ParseError(f"syntax error: unexpected {what}", off)

    def _jet(self, alpha, comp, off):
        if self.n is not None and len(alpha) != self.n:
            raise ParseError(f"multi-index {alpha} has {len(alpha)} entries, expected {self.n}", off)
        if comp < 1 or (self.K is not None and comp > self.K):
            raise ParseError(f"unknown component u{comp}", off)
        if self.m is not None and sum(alpha) > self.m:
            raise ParseError(f"jet order {sum(alpha)} exceeds m={self.m}", off)
        return Jet(tuple(alpha), comp)


def parse_expression(text: str, n: int | None = None, m: int | None = None,
                     K: int | None = None) -> Expr:
    """Parse ``text``; with ``n, m, K`` given, identifiers are range-checked."""
    if not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, n, m, K)
    e = p.expr()
    kind, v, off = p.peek()
    if kind != "end":
        raise ParseError(f"syntax error: unexpected {v!r}", off)
    return e


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Canonical form; parsing it gives back an equal tree."""
    if isinstance(e, Num):
        if e.value < 0 or math.isnan(e.value) or math.isinf(e.value):
            raise ExprError(f"literal {e.value!r} has no printed form")
        return _num(e.value)
    if isinstance(e, XVar):
        return f"x{e.index}"
    if isinstance(e, Jet):
        if not any(e.alpha):
            return f"u{e.comp}"
        return f"D[{','.join(map(str, e.alpha))}]u{e.comp}"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        return f"-({inner})" if isinstance(e.arg, Bin) else f"-{inner}"
    if isinstance(e, Call):
        return f"{e.fn}({to_text(e.arg)})"
    if isinstance(e, Bin):
        p = _PREC[e.op]
        l, r = to_text(e.left), to_text(e.right)
        if e.op == "^":
            if isinstance(e.left, Bin):
                l = f"({l})"
            if isinstance(e.right, Bin) and e.right.op != "^":
                r = f"({r})"
            return f"{l}^{r}"
        if isinstance(e.left, Bin) and _PREC[e.left.op] < p:
            l = f"({l})"
        if isinstance(e.right, Bin) and _PREC[e.right.op] <= p:
            r = f"({r})"
        return f"{l} {e.op} {r}"
    raise TypeError(e)


def jet_variables(e: Expr) -> set[Jet]:
    if isinstance(e, Jet):
        return {e}
    if isinstance(e, (Neg, Call)):
        return jet_variables(e.arg)
    if isinstance(e, Bin):
        return jet_variables(e.left) | jet_variables(e.right)
    return set()


def x_variables(e: Expr) -> set[int]:
    if isinstance(e, XVar):
        return {e.index}
    if isinstance(e, (Neg, Call)):
        return x_variables(e.arg)
    if isinstance(e, Bin):
        return x_variables(e.left) | x_variables(e.right)
    return set()


# --- evaluation ------------------------------------------------------------


def _guard_log(a):
    if np.any(a <= 0):
        raise ExprDomainError("log of a non-positive value")
    return np.log(a)


def _guard_sqrt(a):
    if np.any(a < 0):
        raise ExprDomainError("sqrt of a negative value")
    return np.sqrt(a)


_FN = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh,
       "log": _guard_log, "sqrt": _guard_sqrt}


def _div(a, b):
    if np.any(b == 0):
        raise ExprDomainError("division by zero")
    return a / b


def _pow(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    neg = a < 0
    if np.any(neg & (np.broadcast_to(b, neg.shape) != np.round(b))):
        raise ExprDomainError("non-integer power of a negative value")
    if np.any((a == 0) & (np.broadcast_to(b, a.shape) < 0)):
        raise ExprDomainError("negative power of zero")
    with np.errstate(over="ignore"):
        return np.power(a, b)


def compile_expr(e: Expr, jet_index: dict):
    """Return ``fn(X, J)`` evaluating ``e`` on point rows ``X`` (P, n) and
    jet rows ``J`` (P, M); ``jet_index`` maps :class:`Jet` to a column."""
    if isinstance(e, Num):
        v = e.value
        return lambda X, J: np.full(len(X), v)
    if isinstance(e, XVar):
        i = e.index - 1
        return lambda X, J: X[:, i]
    if isinstance(e, Jet):
        try:
            col = jet_index[e]
        except KeyError:
            raise ExprError(f"jet variable {to_text(e)} is not declared") from None
        return lambda X, J: J[:, col]
    if isinstance(e, Neg):
        f = compile_expr(e.arg, jet_index)
        return lambda X, J: -f(X, J)
    if isinstance(e, Call):
        f = compile_expr(e.arg, jet_index)
        g = _FN[e.fn]
        return lambda X, J: g(f(X, J))
    if isinstance(e, Bin):
        fl = compile_expr(e.left, jet_index)
        fr = compile_expr(e.right, jet_index)
        if e.op == "+":
            return lambda X, J: fl(X, J) + fr(X, J)
        if e.op == "-":
            return lambda X, J: fl(X, J) - fr(X, J)
        if e.op == "*":
            return lambda X, J: fl(X, J) * fr(X, J)
        if e.op == "/":
            return lambda X, J: _div(fl(X, J), fr(X, J))
        return lambda X, J: _pow(fl(X, J), fr(X, J))
    raise TypeError(e)


# --- symbolic differentiation ---------------------------------------------

ZERO, ONE = Num(0.0), Num(1.0)


def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Bin("+", a, b)


def _subx(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return Neg(b)
    return Bin("-", a, b)


def _mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Bin("*", a, b)


def _divx(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return Bin("/", a, b)


def diff(e: Expr, var: Jet) -> Expr:
    """Partial derivative of ``e`` with respect to one jet variable."""
    if isinstance(e, (Num, XVar)):
        return ZERO
    if isinstance(e, Jet):
        return ONE if e == var else ZERO
    if isinstance(e, Neg):
        d = diff(e.arg, var)
        return ZERO if d == ZERO else Neg(d)
    if isinstance(e, Call):
        a = e.arg
        da = diff(a, var)
        if da == ZERO:
            return ZERO
        outer = {
            "sin": lambda: Call("cos", a),
            "cos": lambda: Neg(Call("sin", a)),
            "exp": lambda: e,
            "log": lambda: _divx(ONE, a),
            "sqrt": lambda: _divx(ONE, Bin("*", Num(2.0), e)),
            "tanh": lambda: Bin("-", ONE, Bin("^", e, Num(2.0))),
        }[e.fn]()
        return _mul(outer, da)
    if isinstance(e, Bin):
        l, r = e.left, e.right
        dl, dr = diff(l, var), diff(r, var)
        if e.op == "+":
            return _add(dl, dr)
        if e.op == "-":
            return _subx(dl, dr)
        if e.op == "*":
            return _add(_mul(dl, r), _mul(l, dr))
        if e.op == "/":
            if dr == ZERO:
                return _divx(dl, r)
            return _divx(_subx(_mul(dl, r), _mul(l, dr)), Bin("^", r, Num(2.0)))
        # power
        if dr == ZERO:
            if dl == ZERO:
                return ZERO
            if isinstance(r, Num):
                lower = ONE if r.value == 1.0 else Bin("^", l, Num(r.value - 1.0)) if r.value - 1.0 >= 0 \
                    else Bin("^", l, Neg(Num(1.0 - r.value)))
            else:
                lower = Bin("^", l, Bin("-", r, ONE))
            return _mul(_mul(r, lower), dl)
        return _mul(e, _add(_mul(dr, Call("log", l)), _divx(_mul(r, dl), l)))
    raise TypeError(e)
