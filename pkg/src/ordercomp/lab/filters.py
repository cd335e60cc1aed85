"""Filter bases on R and R x R and the completion convergence predicates.

A closed-form base is described by its generator at a symbolic index: with
``role='r'`` the generator is the coarse one (index ``k``), with ``role='s'``
it is the fine one (index ``j``), and an ``int`` role gives the concrete
generator.  ``filter_refines`` then reduces "for every k some F_j lies in
G_k" to one germ inclusion.  Custom bases are checked up to a finite depth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .sets import (
    Atom,
    GNum,
    Sequence_,
    StructuralError,
    TaggedSet,
    TailSet,
    diagonal_parts,
    germ,
    intersect_parts,
    is_subset,
    parts_empty,
    product_parts,
    project_parts,
    radius,
    rational_parts,
)
from .symreal import SymReal

K_MAX = 64


class EmptyTraceError(ValueError):
    """The base has a generator disjoint from the subspace: no trace exists."""


class FilterBase:
    dim: int = 1
    custom: bool = False

    def parts(self, role) -> list:
        raise NotImplementedError

    def __and__(self, other):
        return meet_filter(self, other)

    def __mul__(self, other):
        return product_filter(self, other)


def _pt(p) -> tuple:
    return tuple(SymReal.of(c) for c in (p if isinstance(p, (tuple, list)) else (p,)))


def _box_around(p: tuple, role, rational: bool) -> tuple:
    t = radius(role)
    return tuple(Atom.open(GNum(c) - t, GNum(c) + t, rational) for c in p)


@dataclass(frozen=True)
class Neighborhood(FilterBase):
    """Open balls (max metric) of radius ``1/k`` around ``point``; ``trace`` keeps rationals."""

    point: tuple
    trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "point", _pt(self.point))

    @property
    def dim(self):
        return len(self.point)

    def parts(self, role):
        return [TaggedSet(self.dim, (_box_around(self.point, role, self.trace),))]


@dataclass(frozen=True)
class Characterization(FilterBase):
    """``(ball_k(p) ∩ Q^d) ∪ {p}``: the base whose refinements converge to ``p`` in the completion."""

    point: tuple

    def __post_init__(self):
        object.__setattr__(self, "point", _pt(self.point))

    @property
    def dim(self):
        return len(self.point)

    def parts(self, role):
        box = _box_around(self.point, role, True)
        return [TaggedSet(self.dim, (box, tuple(Atom.point(c) for c in self.point)))]


@dataclass(frozen=True)
class SequenceTail(FilterBase):
    seq: Sequence_

    @property
    def dim(self):
        return self.seq.dim

    def parts(self, role):
        return self.seq.phases()


@dataclass(frozen=True)
class Principal(FilterBase):
    """The single generator ``S`` (a point, list of points or a :class:`TaggedSet`)."""

    S: TaggedSet

    def __post_init__(self):
        S = self.S
        if not isinstance(S, TaggedSet):
            pts = S if isinstance(S, list) else [S]
            S = TaggedSet.points([_pt(p) for p in pts])
        if S.is_empty:
            raise StructuralError("principal filter of the empty set is not proper")
        object.__setattr__(self, "S", S)

    @property
    def dim(self):
        return self.S.dim

    def parts(self, role):
        return [self.S]


@dataclass(frozen=True)
class Meet(FilterBase):
    """``F ∩ G``: generators are the unions ``F_k ∪ G_k``."""

    left: FilterBase
    right: FilterBase

    def __post_init__(self):
        if self.left.dim != self.right.dim:
            raise StructuralError("meet of bases on different spaces")

    @property
    def dim(self):
        return self.left.dim

    @property
    def custom(self):
        return self.left.custom or self.right.custom

    def parts(self, role):
        return self.left.parts(role) + self.right.parts(role)


@dataclass(frozen=True)
class Product(FilterBase):
    left: FilterBase
    right: FilterBase

    def __post_init__(self):
        if self.left.dim != 1 or self.right.dim != 1:
            raise StructuralError("products are formed from bases on R only")

    dim = 2

    @property
    def custom(self):
        return self.left.custom or self.right.custom

    def parts(self, role):
        return product_parts(self.left.parts(role), self.right.parts(role))


MAPS = ("inclusion", "proj1", "proj2", "pair")


@dataclass(frozen=True)
class Image(FilterBase):
    base: FilterBase
    map: str

    def __post_init__(self):
        if self.map not in MAPS:
            raise StructuralError(f"unknown map {self.map!r}")
        need = {"inclusion": None, "proj1": 2, "proj2": 2, "pair": 1}[self.map]
        if need is not None and self.base.dim != need:
            raise StructuralError(f"map {self.map} needs a base of dimension {need}")

    @property
    def dim(self):
        return {"inclusion": self.base.dim, "proj1": 1, "proj2": 1, "pair": 2}[self.map]

    @property
    def custom(self):
        return self.base.custom

    def parts(self, role):
        ps = self.base.parts(role)
        if self.map == "inclusion":
            return ps
        if self.map == "pair":
            return diagonal_parts(ps)
        return project_parts(ps, 0 if self.map == "proj1" else 1)


@dataclass(frozen=True)
class Trace(FilterBase):
    """Trace on a subspace: ``S`` is a :class:`TaggedSet` or ``'Q'`` for ``Q^d``."""

    base: FilterBase
    S: object = "Q"

    def __post_init__(self):
        if isinstance(self.S, TaggedSet) and self.S.dim != self.base.dim:
            raise StructuralError("trace on a subspace of another dimension")
        if parts_empty(self.parts("r")):
            raise EmptyTraceError("a generator misses the subspace: no trace")

    @property
    def dim(self):
        return self.base.dim

    @property
    def custom(self):
        return self.base.custom

    def parts(self, role):
        ps = self.base.parts(role)
        if isinstance(self.S, TaggedSet):
            return intersect_parts(ps, self.S)
        return rational_parts(ps)


@dataclass(frozen=True, eq=False)
class Custom(FilterBase):
    """Generators ``fn(k)`` (concrete :class:`TaggedSet`) for ``k = 1, 2, ...``."""

    fn: Callable[[int], TaggedSet]
    dim: int = 1
    label: str = "custom"

    custom = True

    def generator(self, k: int) -> TaggedSet:
        S = self.fn(k)
        if S.is_empty:
            raise StructuralError(f"{self.label}: generator {k} is empty")
        return S

    def parts(self, role):
        if not isinstance(role, int):
            raise StructuralError("custom bases have no symbolic generator")
        return [self.generator(role)]


# --- constructors ------------------------------------------------------------


def neighborhood(x, trace: bool = False) -> Neighborhood:
    return Neighborhood(x, trace)


def characterization(x) -> Characterization:
    return Characterization(x)


def sequence_tail(*coords) -> SequenceTail:
    return SequenceTail(Sequence_(tuple(coords)))


def principal(S) -> Principal:
    return Principal(S)


def meet_filter(F: FilterBase, G: FilterBase) -> Meet:
    return Meet(F, G)


def product_filter(F: FilterBase, G: FilterBase) -> Product:
    return Product(F, G)


def image_filter(F: FilterBase, map: str) -> Image:
    return Image(F, map)


def trace_filter(F: FilterBase, S="Q") -> Trace:
    return Trace(F, S)


# --- refinement --------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    value: bool
    exact: bool  # False when a custom base forced a bounded-depth check
    depth: int = 0

    def __bool__(self):
        return self.value


def _has_tails(parts, _seen=None) -> bool:
    from .sets import ProductSet

    for p in parts:
        if isinstance(p, TailSet):
            return True
        if isinstance(p, ProductSet) and any(_has_tails(f) for f in p.factors):
            return True
    return False


def check_monotone(F: FilterBase, depth: int = K_MAX) -> None:
    prev = None
    for k in range(1, depth + 1):
        cur = F.parts(k)
        if prev is not None and not is_subset(cur, prev):
            raise StructuralError(f"base is not decreasing at k={k}")
        prev = cur


def refinement(F: FilterBase, G: FilterBase, depth: int = K_MAX) -> Verdict:
    """Is ``F`` finer than ``G``, i.e. does every ``G_k`` contain some ``F_j``?"""
    if F.dim != G.dim:
        raise StructuralError(f"bases live on spaces of dimension {F.dim} and {G.dim}")
    if not (F.custom or G.custom):
        return Verdict(is_subset(F.parts("s"), G.parts("r")), True)
    for B in (F, G):
        if B.custom:
            check_monotone(B, depth)
    for k in range(1, depth + 1):
        target = G.parts(k) if G.custom else G.parts(k)
        if F.custom:
            if _has_tails(target):
                raise StructuralError("custom bases cannot be compared with sequence tails")
            if not any(is_subset(F.parts(j), target) for j in range(1, depth + 1)):
                return Verdict(False, False, depth)
        else:
            if _has_tails(F.parts("s")):
                raise StructuralError("custom bases cannot be compared with sequence tails")
            if not is_subset(F.parts("s"), target):
                return Verdict(False, False, depth)
    return Verdict(True, False, depth)


def filter_refines(F: FilterBase, G: FilterBase, depth: int = K_MAX) -> bool:
    return refinement(F, G, depth).value


# --- predicates --------------------------------------------------------------


def _union_germ(parts, role) -> TaggedSet:
    out = None
    for p in parts:
        g = germ(p, role)
        out = g if out is None else out.union(g)
    return out


def is_cauchy_metric(F: FilterBase, depth: int = K_MAX) -> bool:
    """Do generator diameters (max metric) drop below every ``1/k``?"""
    if F.custom:
        d = _union_germ(F.parts(depth), "s").diameter()
        return d < GNum(SymReal(2) / depth)
    return _union_germ(F.parts("s"), "s").diameter().standard == SymReal(0)


def converges_in_Qsharp(F: FilterBase, x) -> bool:
    if F.dim != 1:
        raise StructuralError("convergence in Q# needs a base on R")
    return filter_refines(F, Characterization(x))


def converges_in_QQsharp(F: FilterBase, p) -> bool:
    if F.dim != 2:
        raise StructuralError("convergence in (QxQ)# needs a base on R x R")
    return filter_refines(F, Characterization(p))


def converges_in_product_of_completions(F: FilterBase, p) -> bool:
    if F.dim != 2:
        raise StructuralError("convergence in Q# x Q# needs a base on R x R")
    p = _pt(p)
    return all(converges_in_Qsharp(Image(F, m), c) for m, c in zip(("proj1", "proj2"), p))


def _family_closure(f, x: SymReal) -> bool:
    from .sets import Approximants, Const, Harmonic, Periodic

    if isinstance(f, Const):
        return x == f.c
    if isinstance(f, Periodic):
        return x in f.values
    if isinstance(f, Approximants):
        return x == f.c or any(x == f.term(n) for n in range(1, K_MAX + 1))
    if isinstance(f, Harmonic):
        if x == f.c:
            return True
        t = (x - f.c) / f.coef if (x - f.c).is_rational else None
        return t is not None and t.rational > 0 and (1 / t.rational).denominator == 1
    raise TypeError(f)


def adherence_contains(Y, x) -> bool:
    """Is ``x`` in the closure of ``Y`` (a 1-d :class:`TaggedSet` or sequence tail)?"""
    x = SymReal.of(x)
    if isinstance(Y, (SequenceTail, Sequence_)):
        seq = Y.seq if isinstance(Y, SequenceTail) else Y
        if seq.dim != 1:
            raise StructuralError("adherence is computed on R")
        return _family_closure(seq.coords[0], x)
    if Y.dim != 1:
        raise StructuralError("adherence is computed on R")
    gx = GNum(x)
    for (a,) in Y.boxes:
        if not (gx < a.lo) and not (gx > a.hi):
            return True
    return False
