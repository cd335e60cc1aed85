"""Systems ``T(x, D)u = f`` given through a smooth map ``F(x, jet)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .newton import damped_newton
from .nlsc import (
    NearlyFiniteError,
    NlscFunction,
    Piece,
    SingularPointError,
    eval_equal,
    monomials,
)


@dataclass(frozen=True)
class JetSpec:
    n: int
    K: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.K < 1 or self.m < 0:
            raise ValueError("need n >= 1, K >= 1, m >= 0")

    @property
    def multi_indices(self) -> tuple[tuple[int, ...], ...]:
        return monomials(self.n, self.m)

    @property
    def M(self) -> int:
        return self.K * math.comb(self.n + self.m, self.m)

    @cached_property
    def index(self) -> dict:
        """:class:`expr.Jet` -> column, component-major then graded-lex."""
        out = {}
        for j in range(self.K):
            for a in self.multi_indices:
                out[ex.Jet(a, j + 1)] = len(out)
        return out

    def variables(self) -> list[ex.Jet]:
        return list(self.index)


@dataclass(frozen=True)
class PdeSystem:
    spec: JetSpec
    F: tuple[ex.Expr, ...]
    f: tuple[ex.Expr, ...]
    smooth_k: float = math.inf

    def __post_init__(self):
        if len(self.F) != self.spec.K or len(self.f) != self.spec.K:
            raise ValueError(f"need {self.spec.K} equations and right-hand sides")
        for e in self.f:
            if ex.jet_variables(e):
                raise ValueError("right-hand side may not depend on jet variables")
        for e in self.F + self.f:
            if any(i > self.spec.n for i in ex.x_variables(e)):
                raise ValueError("expression uses an undeclared domain variable")
            for v in ex.jet_variables(e):
                if v not in self.spec.index:
                    raise ValueError(f"jet variable {ex.to_text(v)} is not declared")

    @classmethod
    def from_strings(cls, n: int, m: int, F: Sequence[str], f: Sequence[str],
                     smooth_k=math.inf) -> "PdeSystem":
        K = len(F)
        spec = JetSpec(n, K, m)
        Fe = tuple(ex.parse_expression(t, n, m, K) for t in F)
        fe = tuple(ex.parse_expression(t, n, m, K) for t in f)
        return cls(spec, Fe, fe, smooth_k)

    @cached_property
    def _F(self):
        return [ex.compile_expr(e, self.spec.index) for e in self.F]

    @cached_property
    def _f(self):
        return [ex.compile_expr(e, self.spec.index) for e in self.f]

    @cached_property
    def _dF(self):
        return [[ex.compile_expr(ex.diff(e, v), self.spec.index) for v in self.spec.variables()]
                for e in self.F]

    def F_batch(self, X: np.ndarray, J: np.ndarray, j: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.spec.n)
        J = np.asarray(J, dtype=float).reshape(-1, self.spec.M)
        if j is not None:
            return self._F[j](X, J)
        return np.stack([g(X, J) for g in self._F], axis=1)

    def f_batch(self, X: np.ndarray, j: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.spec.n)
        J = np.zeros((len(X), self.spec.M))
        if j is not None:
            return self._f[j](X, J)
        return np.stack([g(X, J) for g in self._f], axis=1)

    def jacobian(self, x, xi) -> np.ndarray:
        X = np.asarray(x, dtype=float).reshape(1, -1)
        J = np.asarray(xi, dtype=float).reshape(1, -1)
        return np.array([[float(d(X, J)[0]) for d in row] for row in self._dF])

    def rhs_function(self, grid, j: int = 0) -> NlscFunction:
        return NlscFunction.from_callable(grid, lambda X, j=j: self.f_batch(X, j),
                                          label=ex.to_text(self.f[j]), smooth_l=self.smooth_k)


def eval_F(sys: PdeSystem, x, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (sys.spec.M,):
        raise ValueError(f"jet vector must have length {sys.spec.M}")
    if not np.all(np.isfinite(xi)):
        raise ValueError("jet vector must be finite")
    return sys.F_batch(np.atleast_1d(np.asarray(x, dtype=float)), xi)[0]


# --- jets of cellwise functions --------------------------------------------


def piece_jets(spec: JetSpec, pieces: Sequence[Piece], X: np.ndarray) -> np.ndarray:
    """Jet rows ``(P, M)`` of one cell's component pieces at points ``X``."""
    cols = []
    for p in pieces:
        if not p.finite:
            raise NearlyFiniteError("infinite piece under the nonlinear operator")
        for a in spec.multi_indices:
            cols.append(p.deriv(a).value(X))
    return np.stack(cols, axis=1)


def jet(spec: JetSpec, u: Sequence[NlscFunction], x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grid = u[0].grid
    cells = grid.locate(x)
    if len(cells) != 1:
        raise SingularPointError(f"{tuple(x)} lies on a cell face")
    k = grid.flat(cells[0])
    X = x.reshape(1, -1)
    for comp in u:
        if comp.grid != grid:
            raise ValueError("components live on different grids")
        for c, p in comp.singular.varieties:
            if c == k and p.value(X)[0] == 0.0:
                raise SingularPointError(f"{tuple(x)} lies on a variety of the singular set")
        if tuple(x) in {tuple(pt) for pt in comp.singular.points}:
            raise SingularPointError(f"{tuple(x)} is a singular point")
    return piece_jets(spec, [comp.pieces[k] for comp in u], X)[0]


@dataclass(frozen=True, eq=False)
class TPiece(Piece):
    """``F_j(x, jet of the cell's pieces)``, evaluated exactly (never refitted)."""

    system: PdeSystem
    j: int
    inputs: tuple[Piece, ...]

    def value(self, X):
        X = np.asarray(X, dtype=float).reshape(-1, self.system.spec.n)
        return self.system.F_batch(X, piece_jets(self.system.spec, self.inputs, X), self.j)


def apply_T(sys: PdeSystem, u: Sequence[NlscFunction]) -> tuple[NlscFunction, ...]:
    u = tuple(u)
    if len(u) != sys.spec.K:
        raise ValueError(f"expected {sys.spec.K} components")
    grid = u[0].grid
    for c in u:
        if c.grid != grid:
            raise ValueError("components live on different grids")
        if any(not p.finite for p in c.pieces):
            raise NearlyFiniteError("T applied to a function with infinite cells")
    singular = u[0].singular
    for c in u[1:]:
        singular = singular.union(c.singular)
    smooth = min(c.smooth_l for c in u) - sys.spec.m
    out = []
    for j in range(sys.spec.K):
        pieces = tuple(TPiece(sys, j, tuple(c.pieces[k] for c in u)) for k in range(grid.ncells))
        out.append(NlscFunction(grid, pieces, singular, min(smooth, sys.smooth_k), "lower"))
    return tuple(out)


# the quotient class of u is represented by its image under T
quotient_image = apply_T


def equivalent_mod_T(sys: PdeSystem, u, v, rtol: float = 1e-12, density: int = 3) -> bool:
    tu, tv = apply_T(sys, u), apply_T(sys, v)
    return all(eval_equal(a, b, density, rtol) for a, b in zip(tu, tv))


# --- admissibility ---------------------------------------------------------


def as_box(box, M: int) -> np.ndarray:
    b = np.asarray(box, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (M, 1))
    if b.shape != (M, 2) or np.any(b[:, 0] > b[:, 1]):
        raise ValueError(f"jet box must be a (lo, hi) pair or an ({M}, 2) array")
    return b


def sample_box(rng: np.random.Generator, box: np.ndarray, count: int) -> np.ndarray:
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((count, len(box)))


def check_admissibility(sys: PdeSystem, x, box=(-2.0, 2.0), samples: int = 256, seed=0,
                        delta: float | None = None) -> bool:
    """Numerical witness that ``f(x)`` is interior to the range of ``F(x, .)``.

    ``False`` means no witness was found, not that the condition fails.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    box = as_box(box, sys.spec.M)
    rng = np.random.default_rng(seed)
    xi = sample_box(rng, box, samples)
    X = np.tile(x, (samples, 1))
    with np.errstate(all="ignore"):
        try:
            vals = sys.F_batch(X, xi)
        except ex.ExprDomainError:
            return False
    fx = sys.f_batch(x.reshape(1, -1))[0]
    ok = np.all(np.isfinite(vals), axis=1)
    vals, xi = vals[ok], xi[ok]
    if len(vals) == 0:
        return False
    if sys.spec.K == 1:
        return bool(np.any(vals[:, 0] < fx[0]) and np.any(vals[:, 0] > fx[0]))
    for j in range(sys.spec.K):
        d = delta if delta is not None else 1e-3 * (1.0 + abs(fx[j]))
        for sgn in (1.0, -1.0):
            target = fx.copy()
            target[j] += sgn * d
            best = xi[np.argmin(np.linalg.norm(vals - target, axis=1))]
            _, res = damped_newton(lambda z: eval_F(sys, x, z) - target,
                                   lambda z: sys.jacobian(x, z), best, tol=1e-9)
            if not res <= 1e-9:
                return False
    return True
