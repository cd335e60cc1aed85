"""Exact reals of the form ``q0 + q1*sqrt2 + q2*pi + q3*e`` with rational ``q``.

Signs are decided by nested decimal enclosures of the tagged constants.
Structural equality is taken as numerical equality, i.e. the tags are
assumed linearly independent over the rationals (true for ``sqrt2`` alone).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering

import mpmath

TAGS = ("sqrt2", "pi", "e")
MAX_DIGITS = 400


class UndecidedComparison(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def _floor_scaled(tag: str, k: int) -> int:
    """``floor(tag * 10**k)``."""
    if tag == "sqrt2":
        return math.isqrt(2 * 10 ** (2 * k))
    with mpmath.workdps(k + 30):
        c = mpmath.pi if tag == "pi" else mpmath.e
        return int(mpmath.floor(c * mpmath.mpf(10) ** k))


def enclosure(tag: str, k: int) -> tuple[Fraction, Fraction]:
    """Rational interval of width ``10**-k`` around ``tag``; nested in ``k``."""
    if tag not in TAGS:
        raise ValueError(f"unknown constant {tag!r}")
    d = _floor_scaled(tag, k)
    return Fraction(d, 10**k), Fraction(d + 1, 10**k)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@total_ordering
@dataclass(frozen=True)
class SymReal:
    rational: Fraction = Fraction(0)
    coeffs: tuple[tuple[str, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rational", _frac(self.rational))
        clean = tuple(sorted((t, _frac(c)) for t, c in self.coeffs if c != 0))
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def of(cls, x) -> "SymReal":
        if isinstance(x, SymReal):
            return x
        if isinstance(x, str):
            return parse_symreal(x)
        return cls(_frac(x))

    @classmethod
    def const(cls, tag: str) -> "SymReal":
        if tag not in TAGS:
            raise ValueError(f"unknown constant {tag!r}")
        return cls(Fraction(0), ((tag, Fraction(1)),))

    @property
    def is_rational(self) -> bool:
        return not self.coeffs

    def _combine(self, other, sign: int) -> "SymReal":
        other = SymReal.of(other)
        d = dict(self.coeffs)
        for t, c in other.coeffs:
            d[t] = d.get(t, Fraction(0)) + sign * c
        return SymReal(self.rational + sign * other.rational, tuple(d.items()))

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return SymReal.of(other)._combine(self, -1)

    def __neg__(self):
        return SymReal(-self.rational, tuple((t, -c) for t, c in self.coeffs))

    def __mul__(self, q):
        if isinstance(q, SymReal):
            if q.is_rational:
                q = q.rational
            elif self.is_rational:
                return q * self.rational
            else:
                raise TypeError("product of two irrational SymReals is not linear")
        q = _frac(q)
        return SymReal(self.rational * q, tuple((t, c * q) for t, c in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, q):
        if isinstance(q, SymReal):
            if not q.is_rational:
                raise TypeError("division by an irrational SymReal")
            q = q.rational
        return self * (1 / _frac(q))

    def enclosure(self, k: int) -> tuple[Fraction, Fraction]:
        lo = hi = self.rational
        for t, c in self.coeffs:
            a, b = enclosure(t, k)
            if c > 0:
                lo, hi = lo + c * a, hi + c * b
            else:
                lo, hi = lo + c * b, hi + c * a
        return lo, hi

    def sign(self) -> int:
        if self.is_rational:
            return (self.rational > 0) - (self.rational < 0)
        k = 4
        while k <= MAX_DIGITS:
            lo, hi = self.enclosure(k)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            k *= 2
        raise UndecidedComparison(f"cannot separate {self} from 0")

    def __lt__(self, other):
        return (self - SymReal.of(other)).sign() < 0

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SymReal(_frac(other))
        if not isinstance(other, SymReal):
            return NotImplemented
        return self.rational == other.rational and self.coeffs == other.coeffs

    __hash__ = lambda self: hash((self.rational, self.coeffs))

    def __float__(self):
        lo, hi = self.enclosure(20)
        return float((lo + hi) / 2)

    def floor(self) -> int:
        if self.is_rational:
            return math.floor(self.rational)
        k = 4
        while k <= MAX_DIGITS:
            lo, hi = self.enclosure(k)
            if math.floor(lo) == math.floor(hi):
                return math.floor(lo)
            k *= 2
        raise UndecidedComparison(f"cannot decide floor of {self}")

    def __str__(self):
        parts = []
        for t, c in self.coeffs:
            if c == 1:
                parts.append(t)
            elif c == -1:
                parts.append(f"-{t}")
            elif c.denominator != 1 and c.numerator in (1, -1):
                parts.append(f"{'-' if c < 0 else ''}{t}/{c.denominator}")
            else:
                parts.append(f"{c}*{t}")
        if self.rational != 0 or not parts:
            parts.append(str(self.rational))
        s = " + ".join(parts)
        return s.replace("+ -", "- ")

    def __repr__(self):
        return f"SymReal({self})"


SQRT2 = SymReal.const("sqrt2")
PI = SymReal.const("pi")
E = SymReal.const("e")

_TOK = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/()]))")


def parse_symreal(text: str) -> SymReal:
    """Parse linear expressions such as ``sqrt2/2``, ``-1/3`` or ``pi + 1``."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad real literal {text!r} at offset {pos}")
        toks.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
    toks.append(("end", ""))
    i = 0

    def peek():
        return toks[i]

    def take():
        nonlocal i
        i += 1
        return toks[i - 1]

    def expr():
        v = term()
        while peek()[1] in ("+", "-"):
            op = take()[1]
            w = term()
            v = v + w if op == "+" else v - w
        return v

    def term():
        v = unary()
        while peek()[1] in ("*", "/"):
            op = take()[1]
            w = unary()
            v = v * w if op == "*" else v / w
        return v

    def unary():
        if peek()[1] == "-":
            take()
            return -unary()
        if peek()[1] == "+":
            take()
            return unary()
        kind, v = take()
        if kind == "num":
            return SymReal(Fraction(v))
        if kind == "name":
            if v not in TAGS:
                raise ValueError(f"unknown constant {v!r}")
            return SymReal.const(v)
        if v == "(":
            r = expr()
            if take()[1] != ")":
                raise ValueError(f"unbalanced parentheses in {text!r}")
            return r
        raise ValueError(f"bad real literal {text!r}")

    try:
        out = expr()
    except TypeError as exc:
        raise ValueError(str(exc)) from None
    if peek()[0] != "end":
        raise ValueError(f"trailing input in {text!r}")
    return out
