"""Nearly finite normal lower semi-continuous functions on a box grid.

A function is stored as one piece per grid cell.  Pieces are continuous on
the closed cell (polynomials, +/-inf flags, or composite evaluators built on
top of polynomials), so the value at a singular point is decided by a rule
over the limits of the incident pieces:

* ``"lower"``: min of incident limits, which is ``(I o S)(u)`` and ``I(u)``;
* ``"upper"``: max of incident limits, which is ``S(u)``.

Everything in this module is immutable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np


class GridMismatch(ValueError):
    pass


class DomainError(ValueError):
    pass


class SingularPointError(ValueError):
    pass


class InfiniteArithmeticError(ArithmeticError):
    """Raised for inf - inf, which is never given a value."""


class NearlyFiniteError(ValueError):
    pass


# --------------------------------------------------------------------------
# multi-indices
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def monomials(n: int, d: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices with ``|e| <= d`` in graded-lex order.

    Degree ascending; inside one degree, lexicographically descending
    exponent tuples, so ``(1, 0)`` precedes ``(0, 1)``.
    """
    out = []
    for deg in range(d + 1):
        batch = [e for e in itertools.product(range(deg + 1), repeat=n) if sum(e) == deg]
        batch.sort(reverse=True)
        out.extend(batch)
    return tuple(out)


def _falling(e: int, a: int) -> int:
    out = 1
    for i in range(a):
        out *= e - i
    return out


# --------------------------------------------------------------------------
# grid
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Rectilinear tensor grid on the open box ``prod (lower_i, upper_i)``.

    ``nodes[i]`` holds the breakpoints on axis ``i``.  Uniform grids are
    built with :meth:`uniform`; refinement keeps the tensor structure.
    """

    nodes: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("grid needs at least one axis")
        for ax in self.nodes:
            if len(ax) < 2:
                raise ValueError("every axis needs at least one cell")
            if any(not (b > a) for a, b in zip(ax, ax[1:])):
                raise ValueError("axis nodes must be strictly increasing")
            if not all(math.isfinite(v) for v in ax):
                raise ValueError("axis nodes must be finite")

    @classmethod
    def uniform(cls, lower, upper, cells) -> "Grid":
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        cells = np.atleast_1d(np.asarray(cells, dtype=int))
        if not (len(lower) == len(upper) == len(cells)):
            raise ValueError("lower, upper and cells must have the same length")
        if np.any(lower >= upper):
            raise ValueError("lower[i] < upper[i] is required")
        if np.any(cells < 1):
            raise ValueError("cells[i] >= 1 is required")
        return cls(tuple(tuple(float(v) for v in np.linspace(a, b, c + 1))
                         for a, b, c in zip(lower, upper, cells)))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(ax) - 1 for ax in self.nodes)

    @property
    def ncells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def lower(self) -> np.ndarray:
        return np.array([ax[0] for ax in self.nodes])

    @property
    def upper(self) -> np.ndarray:
        return np.array([ax[-1] for ax in self.nodes])

    def cells(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(s) for s in self.shape))

    def flat(self, cell: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(cell), self.shape))

    def multi(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def cell_bounds(self, cell) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(cell, (int, np.integer)):
            cell = self.multi(cell)
        lo = np.array([self.nodes[i][c] for i, c in enumerate(cell)])
        hi = np.array([self.nodes[i][c + 1] for i, c in enumerate(cell)])
        return lo, hi

    def cell_center(self, cell) -> np.ndarray:
        lo, hi = self.cell_bounds(cell)
        return (lo + hi) / 2

    def cell_radius(self, cell) -> np.ndarray:
        lo, hi = self.cell_bounds(cell)
        return (hi - lo) / 2

    def interior_faces(self) -> list[tuple[int, tuple[int, ...]]]:
        """Faces separating two cells, as ``(axis, index)``.

        ``index[axis]`` is the node number on that axis; the other entries
        are cell numbers.
        """
        faces = []
        shape = self.shape
        for axis in range(self.n):
            ranges = [range(1, shape[i]) if i == axis else range(shape[i]) for i in range(self.n)]
            faces.extend((axis, idx) for idx in itertools.product(*ranges))
        return faces

    def face_midpoint(self, face) -> np.ndarray:
        axis, idx = face
        pt = []
        for i, c in enumerate(idx):
            if i == axis:
                pt.append(self.nodes[i][c])
            else:
                pt.append(0.5 * (self.nodes[i][c] + self.nodes[i][c + 1]))
        return np.array(pt)

    def locate(self, x) -> list[tuple[int, ...]]:
        """Cells whose closure contains ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if len(x) != self.n:
            raise DomainError(f"point has dimension {len(x)}, grid has {self.n}")
        per_axis = []
        for i, ax in enumerate(self.nodes):
            v = x[i]
            if not (ax[0] <= v <= ax[-1]):
                raise DomainError(f"point {tuple(x)} lies outside the closed domain")
            j = int(np.searchsorted(ax, v, side="right")) - 1
            ncell = len(ax) - 1
            if ax[min(j, ncell)] == v:
                cand = [c for c in (j - 1, j) if 0 <= c < ncell]
            else:
                cand = [j]
            per_axis.append(cand)
        return list(itertools.product(*per_axis))

    def neighbours(self, cell) -> list[tuple[int, ...]]:
        """Cells touching ``cell`` (faces or corners), ``cell`` excluded."""
        out = []
        for off in itertools.product((-1, 0, 1), repeat=self.n):
            if not any(off):
                continue
            c = tuple(a + b for a, b in zip(cell, off))
            if all(0 <= v < s for v, s in zip(c, self.shape)):
                out.append(c)
        return out

    def split(self, cells: Iterable) -> "Grid":
        """Bisect every listed cell along every axis.

        The midpoints are inserted into the axis node lists, so whole slabs
        are split and the grid stays a tensor grid.
        """
        extra = [set() for _ in range(self.n)]
        for cell in cells:
            if isinstance(cell, (int, np.integer)):
                cell = self.multi(cell)
            for i, c in enumerate(cell):
                extra[i].add(0.5 * (self.nodes[i][c] + self.nodes[i][c + 1]))
        return Grid(tuple(tuple(sorted(set(ax) | e)) for ax, e in zip(self.nodes, extra)))

    def common_refinement(self, other: "Grid") -> "Grid":
        if self.n != other.n or not np.allclose(self.lower, other.lower) or not np.allclose(self.upper, other.upper):
            raise GridMismatch("grids cover different domains")
        return Grid(tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(self.nodes, other.nodes)))

    def parent_cell(self, fine: "Grid", cell) -> tuple[int, ...]:
        """Index in ``self`` of the cell containing ``fine``'s ``cell``."""
        c = fine.cell_center(cell)
        return tuple(int(np.searchsorted(ax, v, side="right")) - 1 for ax, v in zip(self.nodes, c))


# --------------------------------------------------------------------------
# sample sets
# --------------------------------------------------------------------------


def chebyshev_unit(q: int) -> np.ndarray:
    i = np.arange(q)
    return (1.0 - np.cos((2 * i + 1) * np.pi / (2 * q))) / 2.0


def cell_samples(grid: Grid, cell, density: int) -> np.ndarray:
    """``density**n`` Chebyshev-placed points strictly inside ``cell``."""
    lo, hi = grid.cell_bounds(cell)
    t = chebyshev_unit(density)
    axes = [lo[i] + (hi[i] - lo[i]) * t for i in range(grid.n)]
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, grid.n)


def cell_closure_samples(grid: Grid, cell, density: int) -> np.ndarray:
    """Interior samples plus the corners and face centres of ``cell``."""
    lo, hi = grid.cell_bounds(cell)
    mid = (lo + hi) / 2
    extra = [np.array(p) for p in itertools.product(*zip(lo, hi))]
    for i in range(grid.n):
        for v in (lo[i], hi[i]):
            p = mid.copy()
            p[i] = v
            extra.append(p)
    return np.vstack([cell_samples(grid, cell, density), np.array(extra)])


class SampleSet:
    """Canonical evaluation points: interior samples of every cell, then the
    midpoints of every interior face."""

    def __init__(self, grid: Grid, density: int = 3):
        if density < 1:
            raise ValueError("density must be positive")
        self.grid = grid
        self.density = density
        interior = []
        self.interior_by_cell = []
        start = 0
        for cell in grid.cells():
            pts = cell_samples(grid, cell, density)
            interior.append(pts)
            self.interior_by_cell.append(np.arange(start, start + len(pts)))
            start += len(pts)
        self.n_interior = start
        self.faces = grid.interior_faces()
        face_pts = [grid.face_midpoint(f) for f in self.faces]
        boundary = [[] for _ in range(grid.ncells)]
        for k, f in enumerate(self.faces):
            axis, idx = f
            lo = list(idx)
            lo[axis] -= 1
            for c in (tuple(lo), tuple(idx)):
                boundary[grid.flat(c)].append(start + k)
        self.boundary_by_cell = [np.array(b, dtype=int) for b in boundary]
        parts = interior + ([np.array(face_pts)] if face_pts else [])
        self.points = np.vstack(parts) if parts else np.zeros((0, grid.n))

    def __len__(self):
        return len(self.points)


@lru_cache(maxsize=64)
def sample_set(grid: Grid, density: int = 3) -> SampleSet:
    return SampleSet(grid, density)


# --------------------------------------------------------------------------
# pieces
# --------------------------------------------------------------------------


class Piece:
    """A function continuous on a closed cell, evaluated on ``(P, n)`` arrays."""

    finite = True

    def value(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def deriv(self, alpha: tuple[int, ...]) -> "Piece":
        raise SingularPointError(f"{type(self).__name__} piece has no classical derivatives")


@dataclass(frozen=True, eq=False)
class Poly(Piece):
    """Polynomial in the local coordinates ``x - center``.

    ``coeffs`` follow :func:`monomials` ``(n, degree)``.
    """

    center: tuple[float, ...]
    coeffs: tuple[float, ...]
    degree: int

    def __post_init__(self):
        if len(self.coeffs) != len(monomials(len(self.center), self.degree)):
            raise ValueError("coefficient count does not match degree")

    @property
    def n(self) -> int:
        return len(self.center)

    @cached_property
    def _exps(self) -> np.ndarray:
        return np.array(monomials(self.n, self.degree), dtype=int).reshape(-1, self.n)

    def value(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.n)
        d = X - np.asarray(self.center)
        # sequential sum over non-zero terms: zero padding leaves values bit-identical
        out = np.zeros(len(X))
        for e, c in zip(self._exps, self.coeffs):
            if c == 0.0:
                continue
            t = np.full(len(X), c)
            for i in range(self.n):
                if e[i]:
                    t = t * d[:, i] ** e[i]
            out = out + t
        return out

    def deriv(self, alpha):
        alpha = tuple(alpha)
        if not any(alpha):
            return self
        new_deg = max(self.degree - sum(alpha), 0)
        target = {e: k for k, e in enumerate(monomials(self.n, new_deg))}
        out = [0.0] * len(target)
        for e, c in zip(monomials(self.n, self.degree), self.coeffs):
            if c == 0 or any(ei < ai for ei, ai in zip(e, alpha)):
                continue
            factor = 1
            for ei, ai in zip(e, alpha):
                factor *= _falling(ei, ai)
            out[target[tuple(ei - ai for ei, ai in zip(e, alpha))]] += c * factor
        return Poly(self.center, tuple(out), new_deg)

    def padded(self, degree: int) -> "Poly":
        if degree < self.degree:
            raise ValueError("cannot pad to a lower degree")
        if degree == self.degree:
            return self
        pos = {e: k for k, e in enumerate(monomials(self.n, degree))}
        out = [0.0] * len(pos)
        for e, c in zip(monomials(self.n, self.degree), self.coeffs):
            out[pos[e]] = c
        return Poly(self.center, tuple(out), degree)

    def __sub__(self, other: "Poly") -> "Poly":
        if self.center != other.center:
            raise ValueError("polynomials expanded about different centres")
        d = max(self.degree, other.degree)
        a, b = self.padded(d), other.padded(d)
        return Poly(self.center, tuple(x - y for x, y in zip(a.coeffs, b.coeffs)), d)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def recentred(self, center) -> "Poly":
        """Same polynomial expanded about another centre (Taylor re-expansion)."""
        center = tuple(float(c) for c in center)
        c = np.asarray(center).reshape(1, -1)
        coeffs = []
        for e in monomials(self.n, self.degree):
            fact = math.prod(math.factorial(k) for k in e)
            coeffs.append(float(self.deriv(e).value(c)[0]) / fact)
        return Poly(center, tuple(coeffs), self.degree)

    @classmethod
    def from_global(cls, coeffs: dict, center, degree: int | None = None) -> "Poly":
        """Build from ``{exponent tuple: coefficient}`` in global coordinates."""
        n = len(center)
        if degree is None:
            degree = max((sum(e) for e in coeffs), default=0)
        pos = {e: k for k, e in enumerate(monomials(n, degree))}
        c = [0.0] * len(pos)
        for e, v in coeffs.items():
            c[pos[tuple(e)]] = float(v)
        return cls((0.0,) * n, tuple(c), degree).recentred(center)


@dataclass(frozen=True, eq=False)
class Infinite(Piece):
    sign: int

    finite = False

    def value(self, X):
        return np.full(len(np.asarray(X).reshape(len(X), -1)), math.inf * self.sign)

    def deriv(self, alpha):
        raise NearlyFiniteError("derivative of an infinite piece")


@dataclass(frozen=True, eq=False)
class Offset(Piece):
    base: Piece
    shift: float

    @property
    def finite(self):
        return self.base.finite

    def value(self, X):
        return self.base.value(X) + self.shift

    def deriv(self, alpha):
        if not any(alpha):
            return self
        return self.base.deriv(alpha)


@dataclass(frozen=True, eq=False)
class FnPiece(Piece):
    """Vectorised callable ``fn(X) -> values``, continuous on the cell."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "fn"

    def value(self, X):
        return np.broadcast_to(np.asarray(self.fn(np.asarray(X, dtype=float)), dtype=float),
                               (len(X),)).copy()


@dataclass(frozen=True, eq=False)
class Select(Piece):
    """Pointwise max (or min) of two pieces; derivatives follow the selected branch."""

    a: Piece
    b: Piece
    mode: str = "max"

    @property
    def finite(self):
        return self.a.finite and self.b.finite

    def value(self, X):
        va, vb = self.a.value(X), self.b.value(X)
        return np.maximum(va, vb) if self.mode == "max" else np.minimum(va, vb)

    def deriv(self, alpha):
        if not any(alpha):
            return self
        return Branch(self.a, self.b, self.mode, self.a.deriv(alpha), self.b.deriv(alpha))


@dataclass(frozen=True, eq=False)
class Branch(Piece):
    a: Piece
    b: Piece
    mode: str
    da: Piece
    db: Piece

    def value(self, X):
        va, vb = self.a.value(X), self.b.value(X)
        pick_a = va >= vb if self.mode == "max" else va <= vb
        return np.where(pick_a, self.da.value(X), self.db.value(X))


@dataclass(frozen=True, eq=False)
class Diff(Piece):
    """``a - b`` for non-polynomial pieces; used only as a variety equation."""

    a: Piece
    b: Piece

    def value(self, X):
        return _sub(self.a.value(X), self.b.value(X))


def _sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    bad = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
    if np.any(bad):
        raise InfiniteArithmeticError("inf - inf encountered")
    return a - b


# --------------------------------------------------------------------------
# singular sets and functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularSet:
    """Closed nowhere dense set: grid faces, proper zero sets inside
    cells, and isolated points."""

    faces: tuple = ()
    varieties: tuple = ()  # (flat cell, Piece)
    points: tuple = ()

    def __post_init__(self):
        for cell, p in self.varieties:
            if isinstance(p, Poly) and p.is_zero():
                raise ValueError(f"variety polynomial on cell {cell} vanishes identically")

    def union(self, other: "SingularSet") -> "SingularSet":
        def merge(a, b, key=lambda x: x):
            seen = {key(x) for x in a}
            return tuple(a) + tuple(x for x in b if key(x) not in seen)

        return SingularSet(
            merge(self.faces, other.faces),
            merge(self.varieties, other.varieties, key=lambda v: (v[0], id(v[1]))),
            merge(self.points, other.points),
        )

    def __len__(self):
        return len(self.faces) + len(self.varieties) + len(self.points)


def skeleton(grid: Grid) -> SingularSet:
    return SingularSet(faces=tuple(grid.interior_faces()))


@dataclass(frozen=True, eq=False)
class NlscFunction:
    grid: Grid
    pieces: tuple[Piece, ...]
    singular: SingularSet = SingularSet()
    smooth_l: float = math.inf
    rule: str = "lower"
    # (root function, shift) when built by offset(); lets gaps be exact
    origin: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.pieces) != self.grid.ncells:
            raise ValueError(f"{len(self.pieces)} pieces for {self.grid.ncells} cells")
        if self.rule not in ("lower", "upper"):
            raise ValueError(f"unknown singular-value rule {self.rule!r}")

    # --- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "NlscFunction":
        if math.isinf(c):
            return cls(grid, tuple(Infinite(int(np.sign(c))) for _ in range(grid.ncells)))
        return cls(grid, tuple(Poly(tuple(grid.cell_center(k)), (float(c),), 0)
                               for k in range(grid.ncells)))

    @classmethod
    def from_polynomial(cls, grid: Grid, coeffs: dict, degree: int | None = None) -> "NlscFunction":
        """One global polynomial ``{exponents: coefficient}`` restricted to every cell."""
        return cls(grid, tuple(Poly.from_global(coeffs, grid.cell_center(k), degree)
                               for k in range(grid.ncells)))

    @classmethod
    def from_callable(cls, grid: Grid, fn, label: str = "fn", smooth_l=math.inf) -> "NlscFunction":
        piece = FnPiece(fn, label)
        return cls(grid, (piece,) * grid.ncells, smooth_l=smooth_l)

    @classmethod
    def from_cells(cls, grid: Grid, pieces: Sequence[Piece], **kw) -> "NlscFunction":
        return cls(grid, tuple(pieces), **kw)

    # --- basic queries ----------------------------------------------------

    def piece(self, cell) -> Piece:
        if not isinstance(cell, (int, np.integer)):
            cell = self.grid.flat(cell)
        return self.pieces[cell]

    def _reduce(self, vals):
        return min(vals) if self.rule == "lower" else max(vals)

    def __call__(self, x) -> float:
        return eval_at(self, x)

    def values(self, density: int = 3) -> np.ndarray:
        return sample_values(self, sample_set(self.grid, density))


def _on_variety(u: NlscFunction, cell_flat: int, x: np.ndarray) -> bool:
    for c, p in u.singular.varieties:
        if c == cell_flat and p.value(x.reshape(1, -1))[0] == 0.0:
            return True
    return False


def eval_at(u: NlscFunction, x) -> float:
    """Value of ``u`` at ``x``; singular points get the rule over incident limits."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cells = u.grid.locate(x)
    X = x.reshape(1, -1)
    vals = [float(u.piece(c).value(X)[0]) for c in cells]
    if len(vals) == 1:
        return vals[0]
    return u._reduce(vals)


def sample_values(u: NlscFunction, S: SampleSet) -> np.ndarray:
    if S.grid != u.grid:
        raise GridMismatch("sample set built on a different grid")
    out = np.empty(len(S))
    nb = len(S) - S.n_interior
    if nb:
        acc = np.full(nb, math.inf if u.rule == "lower" else -math.inf)
    for k, piece in enumerate(u.pieces):
        idx = S.interior_by_cell[k]
        out[idx] = piece.value(S.points[idx])
        bidx = S.boundary_by_cell[k]
        if len(bidx):
            v = piece.value(S.points[bidx])
            j = bidx - S.n_interior
            acc[j] = np.minimum(acc[j], v) if u.rule == "lower" else np.maximum(acc[j], v)
    if nb:
        out[S.n_interior:] = acc
    if np.any(np.isnan(out)):
        raise InfiniteArithmeticError("undefined value produced on the sample set")
    return out


# --------------------------------------------------------------------------
# Baire operators and regularisation
# --------------------------------------------------------------------------


def baire_lower(u: NlscFunction) -> NlscFunction:
    return replace(u, rule="lower")


def baire_upper(u: NlscFunction) -> NlscFunction:
    return replace(u, rule="upper")


def nlsc_regularize(u: NlscFunction) -> NlscFunction:
    """``I o S``.  Pieces are continuous on cells, so only the singular rule changes."""
    return replace(baire_upper(u), rule="lower")


# --------------------------------------------------------------------------
# order and lattice operations
# --------------------------------------------------------------------------


def _check_grids(*fs: NlscFunction):
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise GridMismatch("functions live on different grids")


def leq(u: NlscFunction, v: NlscFunction, density: int = 3) -> bool:
    _check_grids(u, v)
    return bool(np.all(u.values(density) <= v.values(density)))


def eval_equal(u: NlscFunction, v: NlscFunction, density: int = 3, rtol: float = 0.0) -> bool:
    _check_grids(u, v)
    a, b = u.values(density), v.values(density)
    same_inf = (a == b)
    if rtol == 0.0:
        return bool(np.all(same_inf))
    fin = np.isfinite(a) & np.isfinite(b)
    close = np.abs(a - b) <= rtol * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return bool(np.all(same_inf | (fin & close)))


def _lattice(u: NlscFunction, v: NlscFunction, mode: str, density: int) -> NlscFunction:
    _check_grids(u, v)
    pieces = []
    varieties = []
    for k, (a, b) in enumerate(zip(u.pieces, v.pieces)):
        if a is b:
            pieces.append(a)
            continue
        X = cell_closure_samples(u.grid, k, density)
        va, vb = a.value(X), b.value(X)
        a_wins = np.all(va >= vb) if mode == "max" else np.all(va <= vb)
        b_wins = np.all(vb >= va) if mode == "max" else np.all(vb <= va)
        if a_wins:
            pieces.append(a)
        elif b_wins:
            pieces.append(b)
        else:
            pieces.append(Select(a, b, mode))
            if isinstance(a, Poly) and isinstance(b, Poly):
                d = a - b
                if not d.is_zero():
                    varieties.append((k, d))
            else:
                varieties.append((k, Diff(a, b)))
    singular = u.singular.union(v.singular).union(SingularSet(varieties=tuple(varieties)))
    return NlscFunction(u.grid, tuple(pieces), singular, min(u.smooth_l, v.smooth_l), "lower")


def lattice_sup(u: NlscFunction, v: NlscFunction, density: int = 3) -> NlscFunction:
    return _lattice(u, v, "max", density)


def lattice_inf(u: NlscFunction, v: NlscFunction, density: int = 3) -> NlscFunction:
    return _lattice(u, v, "min", density)


def is_nearly_finite(u: NlscFunction) -> bool:
    inf_cells = {u.grid.multi(k) for k, p in enumerate(u.pieces) if not p.finite}
    if len(inf_cells) == u.grid.ncells:
        return False
    for c in inf_cells:
        if all(nb in inf_cells for nb in u.grid.neighbours(c)):
            return False
    return True


def derivative(u: NlscFunction, alpha: tuple[int, ...]) -> NlscFunction:
    """Classical ``D^alpha`` off the singular set, cell by cell."""
    return NlscFunction(u.grid, tuple(p.deriv(tuple(alpha)) for p in u.pieces), u.singular,
                        u.smooth_l - sum(alpha), u.rule)


def offset(u: NlscFunction, c: float) -> NlscFunction:
    """``u + c``.  Records the shift so gaps against ``u`` are exact."""
    root, s = u.origin if u.origin is not None else (u, 0.0)
    return NlscFunction(u.grid, tuple(Offset(p, c) for p in u.pieces), u.singular,
                        u.smooth_l, u.rule, origin=(root, s + c))


def refine_to(u: NlscFunction, fine: Grid) -> NlscFunction:
    """Restrict pieces to the cells of a refinement of ``u.grid``."""
    if fine == u.grid:
        return u
    pieces = []
    for cell in fine.cells():
        pieces.append(u.piece(u.grid.parent_cell(fine, cell)))
    varieties = []
    for cell in fine.cells():
        parent = u.grid.flat(u.grid.parent_cell(fine, cell))
        for c, p in u.singular.varieties:
            if c == parent:
                varieties.append((fine.flat(cell), p))
    singular = SingularSet(tuple(fine.interior_faces()) if u.singular.faces else (),
                           tuple(varieties), u.singular.points)
    origin = None
    if u.origin is not None:
        origin = (refine_to(u.origin[0], fine), u.origin[1])
    return NlscFunction(fine, tuple(pieces), singular, u.smooth_l, u.rule, origin)


# --------------------------------------------------------------------------
# order convergence
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderInterval:
    lo: NlscFunction
    hi: NlscFunction


@dataclass(frozen=True)
class FunctionSequence:
    """Prefix ``u_1 .. u_N`` of a sequence of K-tuples on one grid."""

    items: tuple[tuple[NlscFunction, ...], ...]

    def __post_init__(self):
        if not self.items:
            return
        K = len(self.items[0])
        g = self.items[0][0].grid
        for it in self.items:
            if len(it) != K:
                raise ValueError("all items need the same component count")
            for f in it:
                if f.grid != g:
                    raise GridMismatch("sequence items live on different grids")

    @classmethod
    def of(cls, items) -> "FunctionSequence":
        return cls(tuple(tuple(i) if isinstance(i, (tuple, list)) else (i,) for i in items))

    @property
    def K(self) -> int:
        return len(self.items[0]) if self.items else 0

    @property
    def grid(self) -> Grid:
        return self.items[0][0].grid

    def __len__(self):
        return len(self.items)

    def component(self, i: int) -> list[NlscFunction]:
        return [it[i] for it in self.items]


def exact_gap(hi: NlscFunction, lo: NlscFunction, density: int = 3) -> float:
    """``max (hi - lo)`` over the sample set.

    When both are offsets of one root function the shift difference is
    returned, so analytic certificates report their nominal gap.
    """
    rh = hi.origin if hi.origin is not None else (hi, 0.0)
    rl = lo.origin if lo.origin is not None else (lo, 0.0)
    if rh[0] is rl[0]:
        return rh[1] - rl[1]
    return float(np.max(_sub(hi.values(density), lo.values(density))))


@dataclass
class ConvergenceReport:
    ok: bool
    gaps: list = field(default_factory=list)
    final_gap: float = math.nan
    tol: float = math.nan
    reasons: list = field(default_factory=list)


def order_convergence_arrays(U: np.ndarray, L: np.ndarray, M: np.ndarray, limit: np.ndarray,
                             tol: float, final_gap: float | None = None) -> ConvergenceReport:
    """Finite-prefix order convergence on sample matrices of shape (N, P)."""
    reasons = []
    if np.any(L[:-1] > L[1:]):
        reasons.append("lower bounds not increasing")
    if np.any(M[1:] > M[:-1]):
        reasons.append("upper bounds not decreasing")
    if np.any(L > M):
        reasons.append("lower bound exceeds upper bound")
    if np.any(L > U) or np.any(U > M):
        reasons.append("sequence leaves its order interval")
    gaps = [float(np.max(_sub(m, l))) for l, m in zip(L, M)]
    if final_gap is None:
        final_gap = max(float(np.max(_sub(limit, L[-1]))), float(np.max(_sub(M[-1], limit))))
    if not final_gap <= tol:
        reasons.append(f"final gap {final_gap!r} exceeds tolerance {tol!r}")
    return ConvergenceReport(not reasons, gaps, final_gap, tol, reasons)


def order_convergence_report(seq: FunctionSequence, bounds, limit, tol: float = 1e-8,
                             density: int = 3) -> ConvergenceReport:
    if len(bounds) != len(seq):
        raise ValueError(f"{len(bounds)} order intervals for {len(seq)} items")
    if not isinstance(limit, (tuple, list)):
        limit = (limit,)
    bounds = [b if isinstance(b, (tuple, list)) else (b,) for b in bounds]
    total = ConvergenceReport(True, [], -math.inf, tol, [])
    for i in range(seq.K):
        comp = seq.component(i)
        lam = [b[i].lo for b in bounds]
        mu = [b[i].hi for b in bounds]
        _check_grids(*comp, *lam, *mu, limit[i])
        U = np.array([f.values(density) for f in comp])
        L = np.array([f.values(density) for f in lam])
        M = np.array([f.values(density) for f in mu])
        fg = max(exact_gap(limit[i], lam[-1], density), exact_gap(mu[-1], limit[i], density))
        rep = order_convergence_arrays(U, L, M, limit[i].values(density), tol, fg)
        total.ok &= rep.ok
        total.gaps.append(rep.gaps)
        total.final_gap = max(total.final_gap, rep.final_gap)
        total.reasons.extend(f"component {i + 1}: {r}" for r in rep.reasons)
    if seq.K == 1:
        total.gaps = total.gaps[0]
    return total


def order_converges(seq: FunctionSequence, bounds, limit, tol: float = 1e-8, density: int = 3) -> bool:
    return order_convergence_report(seq, bounds, limit, tol, density).ok


def tail_envelopes(U: np.ndarray, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Running tail min/max of a sample matrix from row ``start`` on."""
    tail = U[start:]
    lam = np.minimum.accumulate(tail[::-1], axis=0)[::-1]
    mu = np.maximum.accumulate(tail[::-1], axis=0)[::-1]
    return lam, mu


def default_tail_start(N: int) -> int:
    """0-based index where the Cauchy tail is measured: the middle of the prefix."""
    return N // 2


def cauchy_report(seq: FunctionSequence, tol: float = 1e-8, density: int = 3,
                  start: int | None = None) -> ConvergenceReport:
    """Tail-envelope Cauchy test.

    A finite prefix only witnesses the tail from ``start`` (default: the
    middle item) to ``N``; the envelope gap there is compared to ``tol``.
    """
    if len(seq) < 2:
        raise ValueError("a Cauchy test needs at least two items")
    if start is None:
        start = default_tail_start(len(seq))
    total = ConvergenceReport(True, [], -math.inf, tol, [])
    for i in range(seq.K):
        U = np.array([f.values(density) for f in seq.component(i)])
        if np.any(np.isinf(U)):
            raise InfiniteArithmeticError("Cauchy test on a non-finite sample")
        lam, mu = tail_envelopes(U, start)
        if np.any(lam[:-1] > lam[1:]) or np.any(mu[1:] > mu[:-1]):
            total.reasons.append(f"component {i + 1}: envelopes not nested")
        gaps = (mu - lam).max(axis=1)
        total.gaps.append([float(g) for g in gaps])
        total.final_gap = max(total.final_gap, float(gaps[0]))
    if not total.final_gap <= tol:
        total.reasons.append(f"envelope gap {total.final_gap!r} exceeds tolerance {tol!r}")
    total.ok = not total.reasons
    if seq.K == 1:
        total.gaps = total.gaps[0]
    return total


def is_order_cauchy(seq: FunctionSequence, tol: float = 1e-8, density: int = 3,
                    start: int | None = None) -> bool:
    return cauchy_report(seq, tol, density, start).ok
