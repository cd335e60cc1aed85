"""Finitely presented subsets of R and R x R with rational-density tags.

Endpoints are *germ numbers* ``c + a*rho + b*sigma`` where ``rho >> sigma > 0``
are infinitesimals.  A filter generator indexed by ``k`` is written with
``rho = 1/k`` when it plays the coarse role and ``sigma = 1/j`` when it
plays the fine role, so "for all k there is j with F_j inside G_k" becomes a
single inclusion between germ sets.  With ``a = b = 0`` the sets are
ordinary concrete sets.

An atom is an interval (possibly a single point) carrying the tag
``rational``: a rational atom stands for the rationals inside it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence

from .symreal import SymReal


class StructuralError(ValueError):
    pass


@total_ordering
@dataclass(frozen=True)
class GNum:
    c: SymReal
    rho: Fraction = Fraction(0)
    sigma: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "c", SymReal.of(self.c))
        object.__setattr__(self, "rho", Fraction(self.rho))
        object.__setattr__(self, "sigma", Fraction(self.sigma))

    @classmethod
    def of(cls, x) -> "GNum":
        return x if isinstance(x, GNum) else cls(SymReal.of(x))

    def _cmp(self, other) -> int:
        other = GNum.of(other)
        s = (self.c - other.c).sign()
        if s:
            return s
        for a, b in ((self.rho, other.rho), (self.sigma, other.sigma)):
            if a != b:
                return 1 if a > b else -1
        return 0

    def __eq__(self, other):
        if not isinstance(other, (GNum, SymReal, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __hash__(self):
        return hash((self.c, self.rho, self.sigma))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __add__(self, other):
        other = GNum.of(other)
        return GNum(self.c + other.c, self.rho + other.rho, self.sigma + other.sigma)

    def __sub__(self, other):
        other = GNum.of(other)
        return GNum(self.c - other.c, self.rho - other.rho, self.sigma - other.sigma)

    def __neg__(self):
        return GNum(-self.c, -self.rho, -self.sigma)

    @property
    def is_rational(self) -> bool:
        return self.c.is_rational

    @property
    def standard(self) -> SymReal:
        return self.c

    @property
    def infinitesimal(self) -> bool:
        return self.c == SymReal(0)

    def __str__(self):
        s = str(self.c)
        for coef, name in ((self.rho, "r"), (self.sigma, "s")):
            if coef:
                s += f" {'+' if coef > 0 else '-'} {abs(coef) if abs(coef) != 1 else ''}{name}"
        return s


def radius(role: str | int, scale=1) -> GNum:
    """Generator radius: infinitesimal for roles ``'r'``/``'s'``, ``1/k`` for an int."""
    scale = Fraction(scale)
    if role == "r":
        return GNum(SymReal(0), scale, 0)
    if role == "s":
        return GNum(SymReal(0), 0, scale)
    return GNum(SymReal(scale / int(role)))


@dataclass(frozen=True)
class Atom:
    lo: GNum
    hi: GNum
    lo_closed: bool = False
    hi_closed: bool = False
    rational: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", GNum.of(self.lo))
        object.__setattr__(self, "hi", GNum.of(self.hi))
        if self.lo == self.hi and self.lo_closed and self.hi_closed and self.lo.is_rational:
            object.__setattr__(self, "rational", False)  # tag is irrelevant on a rational point

    @classmethod
    def point(cls, p, rational: bool = False) -> "Atom":
        return cls(GNum.of(p), GNum.of(p), True, True, rational)

    @classmethod
    def open(cls, lo, hi, rational: bool = False) -> "Atom":
        return cls(GNum.of(lo), GNum.of(hi), False, False, rational)

    @classmethod
    def closed(cls, lo, hi, rational: bool = False) -> "Atom":
        return cls(GNum.of(lo), GNum.of(hi), True, True, rational)

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi and self.lo_closed and self.hi_closed

    @property
    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            if not (self.lo_closed and self.hi_closed):
                return True
            return self.rational and not self.lo.is_rational
        return False

    def geom_contains(self, p: GNum) -> bool:
        lo_ok = self.lo < p or (self.lo_closed and self.lo == p)
        hi_ok = p < self.hi or (self.hi_closed and self.hi == p)
        return lo_ok and hi_ok

    def contains(self, p) -> bool:
        p = GNum.of(p)
        if self.is_empty or not self.geom_contains(p):
            return False
        return p.is_rational or not self.rational

    def intersect(self, other: "Atom") -> "Atom":
        if self.lo > other.lo or (self.lo == other.lo and not self.lo_closed):
            lo, lc = self.lo, self.lo_closed
        else:
            lo, lc = other.lo, other.lo_closed
        if self.hi < other.hi or (self.hi == other.hi and not self.hi_closed):
            hi, hc = self.hi, self.hi_closed
        else:
            hi, hc = other.hi, other.hi_closed
        return Atom(lo, hi, lc, hc, self.rational or other.rational)

    def __str__(self):
        if self.is_point:
            return "{" + str(self.lo) + "}"
        s = ("[" if self.lo_closed else "(") + f"{self.lo}, {self.hi}" + ("]" if self.hi_closed else ")")
        return s + ("∩Q" if self.rational else "")


Box = tuple  # tuple[Atom, ...]


def _box_empty(box: Box) -> bool:
    return any(a.is_empty for a in box)


def _merge_1d(atoms: list[Atom]) -> list[Atom]:
    """Union of same-tag atoms as a disjoint sorted list."""
    atoms = sorted((a for a in atoms if not a.is_empty), key=lambda a: (a.lo, not a.lo_closed))
    out: list[Atom] = []
    for a in atoms:
        if out:
            b = out[-1]
            touches = a.lo < b.hi or (a.lo == b.hi and (a.lo_closed or b.hi_closed))
            if touches:
                if a.hi > b.hi or (a.hi == b.hi and a.hi_closed):
                    out[-1] = Atom(b.lo, a.hi, b.lo_closed, a.hi_closed, b.rational)
                continue
        out.append(a)
    return out


def _subtract_1d(a: Atom, cover: list[Atom]) -> list[Atom]:
    """``a`` minus a disjoint sorted list of atoms (tags ignored)."""
    pieces = [a]
    for c in cover:
        nxt = []
        for p in pieces:
            left = Atom(p.lo, c.lo, p.lo_closed, not c.lo_closed, p.rational).intersect(p)
            right = Atom(c.hi, p.hi, not c.hi_closed, p.hi_closed, p.rational).intersect(p)
            nxt.extend(x for x in (left, right) if not x.is_empty)
        pieces = nxt
    return pieces


@dataclass(frozen=True)
class TaggedSet:
    """Finite union of boxes of tagged atoms; ``dim`` is 1 or 2."""

    dim: int
    boxes: tuple[Box, ...] = ()

    def __post_init__(self):
        boxes = []
        for b in self.boxes:
            b = tuple(b)
            if len(b) != self.dim:
                raise StructuralError(f"box of dimension {len(b)} in a {self.dim}-d set")
            if not _box_empty(b) and b not in boxes:
                boxes.append(b)
        if self.dim == 1:
            boxes = [(a,) for a in _canonical_1d([b[0] for b in boxes])]
        object.__setattr__(self, "boxes", tuple(boxes))

    @classmethod
    def of_atoms(cls, atoms: Iterable[Atom]) -> "TaggedSet":
        return cls(1, tuple((a,) for a in atoms))

    @classmethod
    def points(cls, pts) -> "TaggedSet":
        pts = [tuple(p) if isinstance(p, (tuple, list)) else (p,) for p in pts]
        dim = len(pts[0]) if pts else 1
        return cls(dim, tuple(tuple(Atom.point(c) for c in p) for p in pts))

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    @property
    def components(self) -> list:
        return [b for b in self.boxes if not all(a.is_point for a in b)]

    @property
    def extra_points(self) -> list:
        return [tuple(a.lo for a in b) for b in self.boxes if all(a.is_point for a in b)]

    def union(self, other: "TaggedSet") -> "TaggedSet":
        self._same_dim(other)
        return TaggedSet(self.dim, self.boxes + other.boxes)

    def intersect(self, other: "TaggedSet") -> "TaggedSet":
        self._same_dim(other)
        return TaggedSet(self.dim, tuple(tuple(a.intersect(b) for a, b in zip(x, y))
                                         for x in self.boxes for y in other.boxes))

    def product(self, other: "TaggedSet") -> "TaggedSet":
        return TaggedSet(self.dim + other.dim, tuple(x + y for x in self.boxes for y in other.boxes))

    def project(self, axis: int) -> "TaggedSet":
        return TaggedSet(1, tuple((b[axis],) for b in self.boxes))

    def rationals(self) -> "TaggedSet":
        return TaggedSet(self.dim, tuple(tuple(Atom(a.lo, a.hi, a.lo_closed, a.hi_closed, True) for a in b)
                                         for b in self.boxes))

    def contains(self, p) -> bool:
        p = tuple(p) if isinstance(p, (tuple, list)) else (p,)
        return any(all(a.contains(c) for a, c in zip(b, p)) for b in self.boxes)

    def diameter(self) -> GNum:
        if self.is_empty:
            return GNum(SymReal(0))
        best = None
        for axis in range(self.dim):
            lo = min(b[axis].lo for b in self.boxes)
            hi = max(b[axis].hi for b in self.boxes)
            d = hi - lo
            best = d if best is None or d > best else best
        return best

    def _same_dim(self, other):
        if other.dim != self.dim:
            raise StructuralError(f"dimension mismatch {self.dim} vs {other.dim}")

    def __str__(self):
        if self.is_empty:
            return "∅"
        return " ∪ ".join(" × ".join(str(a) for a in b) for b in self.boxes)


def _canonical_1d(atoms: list[Atom]) -> list[Atom]:
    full = _merge_1d([a for a in atoms if not a.rational and not a.is_point])
    pts = [a for a in atoms if a.is_point]
    rat = []
    for a in atoms:
        if a.rational and not a.is_point:
            rat.extend(_subtract_1d(a, full))
    merged_rat = []
    for a in _merge_1d([a for a in rat if not a.is_point]):
        merged_rat.append(a)
    pts.extend(Atom.point(a.lo) for a in rat if a.is_point and a.lo.is_rational)
    covering = full + merged_rat
    kept = []
    for p in pts:
        if any(c.contains(p.lo) for c in covering) or any(p.lo == q.lo for q in kept):
            continue
        kept.append(p)
    out = full + merged_rat + kept
    return sorted(out, key=lambda a: (a.lo, not a.lo_closed, a.hi))


# --- covering --------------------------------------------------------------


def _elementary(a: Atom, breaks: list[GNum]):
    """Split ``a`` into points and open gaps at the given breakpoints.

    Yields ``(lo, hi, is_point, needs_full)``; pieces that are empty once the
    tag is applied (irrational points of a rational atom) are skipped.
    """
    pts = sorted({b for b in breaks if a.geom_contains(b) or b == a.lo or b == a.hi})
    pts = [p for p in pts if not (p < a.lo or p > a.hi)]
    ends = sorted(set(pts) | {a.lo, a.hi})
    out = []
    for p in ends:
        if a.geom_contains(p):
            if p.is_rational:
                out.append((p, p, True, False))
            elif not a.rational:
                out.append((p, p, True, True))
    for p, q in zip(ends, ends[1:]):
        if p < q:
            out.append((p, q, False, not a.rational))
    return out


def _piece_in(piece, atom: Atom) -> bool:
    lo, hi, is_point, needs_full = piece
    if needs_full and atom.rational:
        return False
    if is_point:
        return atom.geom_contains(lo)
    return not (lo < atom.lo) and not (hi > atom.hi)


def box_covered(box: Box, cover: Sequence[Box]) -> bool:
    """Is the tagged box ``box`` inside the union of ``cover``?"""
    if _box_empty(box):
        return True
    per_axis = []
    for axis, a in enumerate(box):
        breaks = []
        for c in cover:
            breaks.extend((c[axis].lo, c[axis].hi))
        per_axis.append(_elementary(a, breaks))
    for cell in itertools.product(*per_axis):
        if not any(all(_piece_in(p, c[axis]) for axis, p in enumerate(cell)) for c in cover):
            return False
    return True


def tagged_subset(a: TaggedSet, b: TaggedSet) -> bool:
    if a.dim != b.dim:
        raise StructuralError(f"dimension mismatch {a.dim} vs {b.dim}")
    return all(box_covered(x, b.boxes) for x in a.boxes)


# --- sequences -------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    c: SymReal

    def term(self, n: int) -> SymReal:
        return self.c


@dataclass(frozen=True)
class Harmonic:
    """``c + coef/n``."""

    c: SymReal
    coef: Fraction = Fraction(1)

    def __post_init__(self):
        if Fraction(self.coef) == 0:
            raise StructuralError("harmonic coefficient must be non-zero")

    def term(self, n: int) -> SymReal:
        return SymReal.of(self.c) + Fraction(self.coef) / n


@dataclass(frozen=True)
class Approximants:
    """``floor(c*n)/n`` for irrational ``c``: rationals in ``(c - 1/n, c)``."""

    c: SymReal

    def __post_init__(self):
        if SymReal.of(self.c).is_rational:
            raise StructuralError("approximants need an irrational limit")

    def term(self, n: int) -> SymReal:
        return SymReal(Fraction((SymReal.of(self.c) * n).floor(), n))


@dataclass(frozen=True)
class Periodic:
    """``values[n mod len]``, e.g. ``(-1)^n`` is ``Periodic((1, -1))``."""

    values: tuple[SymReal, ...]

    def term(self, n: int) -> SymReal:
        return self.values[n % len(self.values)]


Family = Const | Harmonic | Approximants | Periodic


@dataclass(frozen=True)
class Sequence_:
    """Closed-form sequence of points ``(a_1(n), ..., a_d(n))``, ``n >= 1``."""

    coords: tuple

    @property
    def dim(self) -> int:
        return len(self.coords)

    def term(self, n: int) -> tuple[SymReal, ...]:
        return tuple(f.term(n) for f in self.coords)

    @property
    def period(self) -> int:
        p = 1
        for f in self.coords:
            if isinstance(f, Periodic):
                p = p * len(f.values) // _gcd(p, len(f.values))
        return p

    def phases(self) -> list["TailSet"]:
        L = self.period
        out = []
        for ph in range(L):
            coords = tuple(Const(f.values[ph % len(f.values)]) if isinstance(f, Periodic) else f
                           for f in self.coords)
            out.append(TailSet(Sequence_(coords), (ph, L) if L > 1 else None))
        return out

    def project(self, axis: int) -> "Sequence_":
        return Sequence_((self.coords[axis],))

    def diagonal(self) -> "Sequence_":
        if self.dim != 1:
            raise StructuralError("diagonal map needs a 1-d sequence")
        return Sequence_((self.coords[0], self.coords[0]))


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _family_germ(f, role) -> Atom:
    if isinstance(f, Const):
        return Atom.point(GNum(f.c))
    if isinstance(f, Harmonic):
        c, k = GNum(f.c), Fraction(f.coef)
        rational = SymReal.of(f.c).is_rational
        t = radius(role, abs(k))
        if k > 0:
            return Atom(c, c + t, False, True, rational)
        return Atom(c - t, c, True, False, rational)
    if isinstance(f, Approximants):
        c = GNum(f.c)
        return Atom(c - radius(role), c, False, False, True)
    raise StructuralError(f"no germ for {f!r}")


@dataclass(frozen=True)
class TailSet:
    """Tail ``{a_n : n >= j}`` of one phase of a closed-form sequence."""

    seq: Sequence_
    phase: tuple | None = None

    @property
    def dim(self) -> int:
        return self.seq.dim

    def germ(self, role="s") -> TaggedSet:
        """Germ set containing the tail; exact for covering questions."""
        return TaggedSet(self.dim, (tuple(_family_germ(f, role) for f in self.seq.coords),))

    def recurrent_point(self):
        if all(isinstance(f, Const) for f in self.seq.coords):
            return tuple(f.c for f in self.seq.coords)
        return None

    def within(self, other: "TailSet") -> bool:
        if self.seq != other.seq:
            return False
        return other.phase is None or other.phase == self.phase


@dataclass(frozen=True)
class ProductSet:
    """Product of two unions of 1-d parts (lists), not both plain boxes."""

    factors: tuple

    @property
    def dim(self) -> int:
        return len(self.factors)


Part = TaggedSet | TailSet | ProductSet


def parts_union(*groups) -> list:
    out = []
    for g in groups:
        out.extend(g)
    return out


def germ(part, role="s") -> TaggedSet:
    if isinstance(part, TaggedSet):
        return part
    if isinstance(part, TailSet):
        return part.germ(role)
    if isinstance(part, ProductSet):
        out = None
        for f in part.factors:
            flat = _germ_union(f, role)
            out = flat if out is None else out.product(flat)
        return out
    raise TypeError(part)


def _germ_union(parts, role) -> TaggedSet:
    parts = parts if isinstance(parts, list) else [parts]
    out = None
    for p in parts:
        g = germ(p, role)
        out = g if out is None else out.union(g)
    return out


def product_parts(xs: list, ys: list) -> list:
    out = []
    for x in xs:
        for y in ys:
            if isinstance(x, TaggedSet) and isinstance(y, TaggedSet):
                out.append(x.product(y))
            else:
                out.append(ProductSet(([x], [y])))
    return out


def project_parts(parts: list, axis: int) -> list:
    out = []
    for p in parts:
        if isinstance(p, TaggedSet):
            out.append(p.project(axis))
        elif isinstance(p, TailSet):
            out.append(TailSet(p.seq.project(axis), p.phase))
        elif isinstance(p, ProductSet):
            out.extend(p.factors[axis])
        else:
            raise TypeError(p)
    return out


def diagonal_parts(parts: list) -> list:
    out = []
    for p in parts:
        if isinstance(p, TailSet):
            out.append(TailSet(p.seq.diagonal(), p.phase))
        elif isinstance(p, TaggedSet) and all(a.is_point for b in p.boxes for a in b):
            out.append(TaggedSet.points([(b[0].lo, b[0].lo) for b in p.boxes]))
        else:
            raise StructuralError("diagonal image of an interval is not a finite union of boxes")
    return out


def rational_parts(parts: list) -> list:
    """Intersection with ``Q^d``."""
    out = []
    for p in parts:
        if isinstance(p, TaggedSet):
            out.append(p.rationals())
        elif isinstance(p, TailSet):
            if all(_family_rational(f) for f in p.seq.coords):
                out.append(p)
        elif isinstance(p, ProductSet):
            facs = [rational_parts(f) for f in p.factors]
            if all(facs):
                out.extend(product_parts(facs[0], facs[1]))
        else:
            raise TypeError(p)
    return out


def _family_rational(f) -> bool:
    if isinstance(f, Const):
        return SymReal.of(f.c).is_rational
    if isinstance(f, Harmonic):
        return SymReal.of(f.c).is_rational
    if isinstance(f, Approximants):
        return True
    raise TypeError(f)


def intersect_parts(parts: list, S: TaggedSet, role="s") -> list:
    out = []
    for p in parts:
        if isinstance(p, TaggedSet):
            out.append(p.intersect(S))
            continue
        g = germ(p, role)
        if tagged_subset(g, S):
            out.append(p)
        elif g.intersect(S).is_empty:
            continue
        else:
            raise StructuralError("sequence tail meets the set only partially")
    return out


def parts_empty(parts: list) -> bool:
    for p in parts:
        if isinstance(p, TaggedSet):
            if not p.is_empty:
                return False
        else:
            return False
    return True


def _struct_within(a, b) -> bool:
    if isinstance(a, TailSet) and isinstance(b, TailSet):
        return a.within(b)
    if isinstance(b, ProductSet):
        if isinstance(a, ProductSet):
            return all(is_subset(fa, fb) for fa, fb in zip(a.factors, b.factors))
        if isinstance(a, TailSet):
            return all(is_subset([TailSet(a.seq.project(i), a.phase)], b.factors[i]) for i in range(a.dim))
        if isinstance(a, TaggedSet):
            return all(all(is_subset([TaggedSet(1, ((atom,),))], b.factors[i]) for i, atom in enumerate(box))
                       for box in a.boxes)
    return False


def is_subset(A, B) -> bool:
    """Decide ``A ⊆ B`` for unions of parts.

    Tail sets and products of tails on the right-hand side are matched
    structurally; everything else goes through the germ covering test.
    """
    a_parts = A if isinstance(A, list) else [A]
    b_parts = B if isinstance(B, list) else [B]
    tagged = [p for p in b_parts if isinstance(p, TaggedSet)]
    struct = [p for p in b_parts if not isinstance(p, TaggedSet)]
    dim = a_parts[0].dim if a_parts else 1
    cover = []
    for t in tagged:
        if t.dim != dim:
            raise StructuralError(f"dimension mismatch {dim} vs {t.dim}")
        cover.extend(t.boxes)
    recurrent = []
    for s in struct:
        for ph in (s.seq.phases() if isinstance(s, TailSet) else []):
            r = ph.recurrent_point()
            if r is not None and (s.phase is None or ph.phase == s.phase or ph.phase is None):
                recurrent.append(r)
    for a in a_parts:
        if any(_struct_within(a, s) for s in struct):
            continue
        if isinstance(a, TaggedSet) and a.is_empty:
            continue
        for box in germ(a).boxes:
            if box_covered(box, cover):
                continue
            if all(x.is_point for x in box) and tuple(x.lo for x in box) in \
                    {tuple(GNum.of(c) for c in r) for r in recurrent}:
                continue
            if isinstance(a, ProductSet) and any(isinstance(s, ProductSet) and _struct_within(a, s)
                                                 for s in struct):
                continue
            return False
    return True


def tail_parts(seq: Sequence_) -> list:
    return seq.phases()
