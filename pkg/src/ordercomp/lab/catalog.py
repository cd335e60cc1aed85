"""Scenario catalogs: ``name | base-expression | predicate | expected`` per line.

Base expressions::

    nbhd(x) nbhd(x, trace) nbhd((x, y))    char(x) char((x, y))
    tail(fam, ...)   fam = const(c) | harm(c) | harm(c, coef) | approx(c) | periodic(a, b, ...)
    principal(S)     S = pts(p, ...) | open(a, b) | closed(a, b) | ratopen(a, b)
                         | ratclosed(a, b) | union(S, S) | prod(S, S)
    meet(F, G) product(F, G) image(F, inclusion|proj1|proj2|pair) trace(F) trace(F, S)

Predicates: ``cauchy``, ``qsharp(x)``, ``qqsharp(x, y)``, ``prodsharp(x, y)``,
``refines(G)``, ``coarsens(G)``, ``adherence(x)``, ``trace_exists``.
Reals are linear expressions in ``sqrt2``, ``pi`` and ``e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import filters as fl
from .sets import (
    Approximants,
    Atom,
    Const,
    Harmonic,
    Periodic,
    StructuralError,
    TaggedSet,
)
from .symreal import SymReal, parse_symreal


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def _split_top(text: str) -> list[str]:
    out, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise CatalogError(f"unbalanced ')' in {text!r}")
        elif ch == "," and depth == 0:
            out.append(text[start:i])
            start = i + 1
    if depth:
        raise CatalogError(f"unbalanced '(' in {text!r}")
    out.append(text[start:])
    return [s.strip() for s in out]


def parse_term(text: str):
    """Nested calls, tuples (top-level comma inside parentheses) and reals."""
    text = text.strip()
    if not text:
        raise CatalogError("empty term")
    head = text.split("(", 1)[0].strip()
    if head.isidentifier() and head not in ("sqrt2", "pi", "e") and text.endswith(")") and "(" in text:
        inner = text[len(text.split("(", 1)[0]) + 1:-1]
        args = () if not inner.strip() else tuple(parse_term(a) for a in _split_top(inner))
        return Call(head, args)
    if head.isidentifier() and head not in ("sqrt2", "pi", "e"):
        return head
    if text.startswith("(") and text.endswith(")") and len(_split_top(text[1:-1])) > 1:
        return tuple(parse_term(a) for a in _split_top(text[1:-1]))
    try:
        return parse_symreal(text)
    except ValueError as exc:
        raise CatalogError(str(exc)) from None


def _real(t) -> SymReal:
    if not isinstance(t, SymReal):
        raise CatalogError(f"expected a real, got {t!r}")
    return t


def _point(t):
    return tuple(_real(c) for c in t) if isinstance(t, tuple) else _real(t)


def _arity(c: Call, *ns):
    if len(c.args) not in ns:
        raise CatalogError(f"{c.name} takes {' or '.join(map(str, ns))} argument(s), got {len(c.args)}")


def build_family(t):
    if not isinstance(t, Call):
        raise CatalogError(f"expected a sequence family, got {t!r}")
    if t.name == "const":
        _arity(t, 1)
        return Const(_real(t.args[0]))
    if t.name == "harm":
        _arity(t, 1, 2)
        coef = _real(t.args[1]) if len(t.args) == 2 else SymReal(1)
        if not coef.is_rational:
            raise CatalogError("harmonic coefficient must be rational")
        return Harmonic(_real(t.args[0]), coef.rational)
    if t.name == "approx":
        _arity(t, 1)
        return Approximants(_real(t.args[0]))
    if t.name == "periodic":
        if not t.args:
            raise CatalogError("periodic needs values")
        return Periodic(tuple(_real(a) for a in t.args))
    raise CatalogError(f"unknown sequence family {t.name!r}")


_INTERVALS = {"open": (False, False), "closed": (True, True), "ratopen": (False, True),
              "ratclosed": (True, True)}


def build_set(t) -> TaggedSet:
    if not isinstance(t, Call):
        raise CatalogError(f"expected a set expression, got {t!r}")
    if t.name == "pts":
        if not t.args:
            raise CatalogError("pts needs at least one point")
        pts = [_point(a) for a in t.args]
        return TaggedSet.points([p if isinstance(p, tuple) else (p,) for p in pts])
    if t.name in _INTERVALS:
        _arity(t, 2)
        closed = t.name in ("closed", "ratclosed")
        rational = t.name.startswith("rat")
        a, b = _real(t.args[0]), _real(t.args[1])
        return TaggedSet.of_atoms([Atom(a, b, closed, closed, rational)])
    if t.name == "union":
        _arity(t, 2)
        return build_set(t.args[0]).union(build_set(t.args[1]))
    if t.name == "prod":
        _arity(t, 2)
        return build_set(t.args[0]).product(build_set(t.args[1]))
    raise CatalogError(f"unknown set expression {t.name!r}")


def build_base(t) -> fl.FilterBase:
    if isinstance(t, str):
        t = parse_term(t)
    if not isinstance(t, Call):
        raise CatalogError(f"expected a base expression, got {t!r}")
    a = t.args
    if t.name == "nbhd":
        _arity(t, 1, 2)
        trace = len(a) == 2
        if trace and a[1] != "trace":
            raise CatalogError("second argument of nbhd must be 'trace'")
        return fl.neighborhood(_point(a[0]), trace)
    if t.name == "char":
        _arity(t, 1)
        return fl.characterization(_point(a[0]))
    if t.name == "tail":
        if not a:
            raise CatalogError("tail needs at least one coordinate")
        return fl.sequence_tail(*(build_family(x) for x in a))
    if t.name == "principal":
        _arity(t, 1)
        return fl.principal(build_set(a[0]))
    if t.name in ("meet", "product"):
        _arity(t, 2)
        op = fl.meet_filter if t.name == "meet" else fl.product_filter
        return op(build_base(a[0]), build_base(a[1]))
    if t.name == "image":
        _arity(t, 2)
        if a[1] not in fl.MAPS:
            raise CatalogError(f"unknown map {a[1]!r}")
        return fl.image_filter(build_base(a[0]), a[1])
    if t.name == "trace":
        _arity(t, 1, 2)
        S = build_set(a[1]) if len(a) == 2 else "Q"
        return fl.trace_filter(build_base(a[0]), S)
    raise CatalogError(f"unknown base expression {t.name!r}")


def evaluate(base_text: str, pred_text: str) -> bool:
    """Verdict of one scenario; structural problems are :class:`CatalogError`."""
    pred = parse_term(pred_text)
    name = pred.name if isinstance(pred, Call) else pred
    args = pred.args if isinstance(pred, Call) else ()
    if name == "trace_exists":
        try:
            build_base(base_text)
        except fl.EmptyTraceError:
            return False
        return True
    F = build_base(base_text)
    if name == "cauchy":
        return fl.is_cauchy_metric(F)
    if name == "qsharp":
        return fl.converges_in_Qsharp(F, _real(args[0]))
    if name in ("qqsharp", "prodsharp"):
        if len(args) != 2:
            raise CatalogError(f"{name} takes two coordinates")
        p = (_real(args[0]), _real(args[1]))
        fn = fl.converges_in_QQsharp if name == "qqsharp" else fl.converges_in_product_of_completions
        return fn(F, p)
    if name in ("refines", "coarsens"):
        G = build_base(args[0])
        return fl.filter_refines(F, G) if name == "refines" else fl.filter_refines(G, F)
    if name == "adherence":
        if isinstance(F, fl.Principal):
            return fl.adherence_contains(F.S, _real(args[0]))
        if isinstance(F, fl.SequenceTail):
            return fl.adherence_contains(F, _real(args[0]))
        raise CatalogError("adherence needs a principal base or a sequence tail")
    raise CatalogError(f"unknown predicate {name!r}")


@dataclass(frozen=True)
class Scenario:
    name: str
    base: str
    predicate: str
    expected: bool
    line: int = 0


@dataclass(frozen=True)
class Outcome:
    scenario: Scenario
    got: bool

    @property
    def passed(self) -> bool:
        return self.got == self.scenario.expected


def parse_catalog(text: str) -> list[Scenario]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cols = [c.strip() for c in line.split("|")]
        if len(cols) != 4:
            raise CatalogError(f"line {no}: expected 4 '|'-separated fields")
        exp = cols[3].lower()
        if exp not in ("true", "false"):
            raise CatalogError(f"line {no}: expected must be true or false")
        out.append(Scenario(cols[0], cols[1], cols[2], exp == "true", no))
    return out


def run_catalog(scenarios: list[Scenario]) -> list[Outcome]:
    out = []
    for s in scenarios:
        try:
            got = evaluate(s.base, s.predicate)
        except CatalogError as exc:
            raise CatalogError(f"line {s.line} ({s.name}): {exc}") from None
        except StructuralError as exc:
            raise CatalogError(f"line {s.line} ({s.name}): {exc}") from None
        out.append(Outcome(s, got))
    return out


def format_table(outcomes: list[Outcome]) -> str:
    rows = [("scenario", "expected", "got", "result")]
    rows += [(o.scenario.name, str(o.scenario.expected).lower(), str(o.got).lower(),
              "pass" if o.passed else "FAIL") for o in outcomes]
    w = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(c.ljust(w[i]) for i, c in enumerate(r)).rstrip() for r in rows]
    passed = sum(o.passed for o in outcomes)
    lines.append(f"{passed}/{len(outcomes)} scenarios passed")
    return "\n".join(lines)


DEFAULT_CATALOG = Path(__file__).with_name("default_catalog.txt")


def load_default() -> list[Scenario]:
    return parse_catalog(DEFAULT_CATALOG.read_text())
