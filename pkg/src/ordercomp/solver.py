"""epsilon-approximate piecewise smooth solutions and their Cauchy sequence.

Per cell the jet equation ``F(c, xi) = f(c) - eps/2`` is solved at the cell
centre ``c`` and the Taylor polynomial with that jet becomes the cell's
piece.  The two-sided residual bound ``-eps <= T u - f <= 0`` is then
checked on a fine interior sample set; violating cells are bisected and
re-solved.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .newton import damped_newton
from .nlsc import (
    ConvergenceReport,
    FunctionSequence,
    Grid,
    NlscFunction,
    OrderInterval,
    Poly,
    SingularSet,
    cauchy_report,
    cell_samples,
    derivative,
    monomials,
    nlsc_regularize,
    offset,
    order_convergence_report,
    refine_to,
    skeleton,
)
from .pde import PdeSystem, apply_T, as_box, check_admissibility, eval_F, piece_jets, sample_box


class SolverError(RuntimeError):
    pass


class NoWitnessError(SolverError):
    def __init__(self, msg, best_residual=math.inf):
        super().__init__(msg)
        self.best_residual = best_residual


class AdmissibilityError(SolverError):
    def __init__(self, points, boundary_points=()):
        self.points = [tuple(map(float, p)) for p in points]
        self.boundary_points = [tuple(map(float, p)) for p in boundary_points]
        super().__init__(f"admissibility not verified at {len(self.points)} cell centre(s)")


class RefinementExhausted(SolverError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class EpsSchedule:
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("empty epsilon schedule")
        if any(not (v > 0 and math.isfinite(v)) for v in self.values):
            raise ValueError("schedule values must be positive and finite")
        if any(b >= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("schedule must be strictly decreasing")

    @classmethod
    def harmonic(cls, N: int) -> "EpsSchedule":
        return cls(tuple(1.0 / n for n in range(1, N + 1)))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SolverOptions:
    box: tuple = (-2.0, 2.0)
    samples: int = 256
    max_restarts: int = 8
    density: int = 3
    verify_factor: int = 10
    max_refine: int = 16
    newton_tol: float = 1e-13
    workers: int = 1


@dataclass
class ApproxSolution:
    u_eps: tuple[NlscFunction, ...]
    gamma: SingularSet
    eps: float
    residual_lo: tuple[float, ...]
    residual_hi: tuple[float, ...]
    cells_refined: int
    refine_rounds: int = 0
    verify_density: int = 0
    verify_points: int = 0
    seconds: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.u_eps[0].grid

    @property
    def verified(self) -> bool:
        return all(lo >= -self.eps for lo in self.residual_lo) and all(hi <= 0 for hi in self.residual_hi)


def solve_cell(sys: PdeSystem, cell_center, eps: float, box=(-2.0, 2.0), seed=0,
               samples: int = 256, max_restarts: int = 8, newton_tol: float = 1e-13) -> np.ndarray:
    """Jet ``xi`` with ``F_j(c, xi)`` in ``[f_j - 3eps/4, f_j - eps/4]`` for all j."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    c = np.atleast_1d(np.asarray(cell_center, dtype=float))
    box = as_box(box, sys.spec.M)
    target = sys.f_batch(c.reshape(1, -1))[0] - eps / 2
    rng = np.random.default_rng(seed)
    starts = sample_box(rng, box, samples)
    with np.errstate(all="ignore"):
        try:
            vals = sys.F_batch(np.tile(c, (samples, 1)), starts)
            score = np.max(np.abs(vals - target), axis=1)
        except ArithmeticError:
            score = np.array([_safe_score(sys, c, s, target) for s in starts])
    score = np.where(np.isfinite(score), score, np.inf)
    order = np.argsort(score, kind="stable")
    best = math.inf
    for k in order[:max_restarts]:
        xi, res = damped_newton(lambda z: eval_F(sys, c, z) - target,
                                lambda z: sys.jacobian(c, z), starts[k], tol=newton_tol)
        best = min(best, res)
        if res <= eps / 4:
            return xi
    raise NoWitnessError(f"no jet found at {tuple(c)} (best residual {best:.3g})", best)


def _safe_score(sys, c, s, target):
    try:
        return float(np.max(np.abs(eval_F(sys, c, s) - target)))
    except ArithmeticError:
        return math.inf


def taylor_piece(sys: PdeSystem, comp: int, xi: np.ndarray, center, degree: int) -> Poly:
    """Polynomial of degree ``degree`` whose jet at ``center`` is ``xi``'s block ``comp``."""
    spec = sys.spec
    if degree < spec.m:
        raise ValueError(f"degree {degree} < order m={spec.m}")
    block = xi[comp * len(spec.multi_indices):(comp + 1) * len(spec.multi_indices)]
    coeff = dict(zip(spec.multi_indices, block))
    out = []
    for e in monomials(spec.n, degree):
        out.append(float(coeff.get(e, 0.0)) / math.prod(math.factorial(k) for k in e))
    return Poly(tuple(float(v) for v in center), tuple(out), degree)


def _cell_seed(seed, round_, k):
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return base + [round_ + 1, k]


def _cell_residuals(sys, grid, pieces_by_comp, k, density):
    X = cell_samples(grid, k, density)
    J = piece_jets(sys.spec, [p[k] for p in pieces_by_comp], X)
    return sys.F_batch(X, J) - sys.f_batch(X)


def _admissible_centres(sys, grid, cells, opts, seed):
    bad, boundary = [], []
    shape = grid.shape
    for k in cells:
        c = grid.cell_center(k)
        if not check_admissibility(sys, c, opts.box, opts.samples, seed=_cell_seed(seed, -1, k)):
            bad.append(c)
            m = grid.multi(k)
            if any(i == 0 or i == s - 1 for i, s in zip(m, shape)):
                boundary.append(c)
    return bad, boundary


def build_approximation(sys: PdeSystem, grid: Grid, eps: float, degree: int = 1, seed=0,
                        options: SolverOptions | None = None) -> ApproxSolution:
    opts = options or SolverOptions()
    if not eps > 0:
        raise ValueError("eps must be positive")
    t0 = time.perf_counter()
    K = sys.spec.K
    vdens = opts.verify_factor * opts.density

    bad, boundary = _admissible_centres(sys, grid, range(grid.ncells), opts, seed)
    if bad:
        raise AdmissibilityError(bad, boundary)

    solved = {}  # cell bounds -> jet

    def key(g, k):
        lo, hi = g.cell_bounds(k)
        return tuple(lo) + tuple(hi)

    def solve(g, k, round_):
        return solve_cell(sys, g.cell_center(k), eps, opts.box, _cell_seed(seed, round_, k),
                          opts.samples, opts.max_restarts, opts.newton_tol)

    refined = 0
    round_ = 0
    while True:
        todo = [k for k in range(grid.ncells) if key(grid, k) not in solved]
        if round_ > 0:
            bad, boundary = _admissible_centres(sys, grid, todo, opts, seed)
            if bad:
                raise AdmissibilityError(bad, boundary)
        if opts.workers > 1:
            with ThreadPoolExecutor(opts.workers) as pool:
                jets = list(pool.map(lambda k: solve(grid, k, round_), todo))
        else:
            jets = [solve(grid, k, round_) for k in todo]
        for k, xi in zip(todo, jets):
            solved[key(grid, k)] = xi
        pieces = [[taylor_piece(sys, j, solved[key(grid, k)], grid.cell_center(k), degree)
                   for k in range(grid.ncells)] for j in range(K)]
        lo = np.full(K, math.inf)
        hi = np.full(K, -math.inf)
        violating = []
        for k in range(grid.ncells):
            r = _cell_residuals(sys, grid, pieces, k, vdens)
            lo = np.minimum(lo, r.min(axis=0))
            hi = np.maximum(hi, r.max(axis=0))
            if np.any(r < -eps) or np.any(r > 0):
                violating.append(k)
        gamma = skeleton(grid)
        u = tuple(NlscFunction(grid, tuple(p), gamma, math.inf, "lower") for p in pieces)
        sol = ApproxSolution(u, gamma, eps, tuple(map(float, lo)), tuple(map(float, hi)), refined,
                             round_, vdens, grid.ncells * vdens ** grid.n,
                             time.perf_counter() - t0)
        if not violating:
            return sol
        if round_ >= opts.max_refine:
            raise RefinementExhausted(
                f"{len(violating)} cell(s) still violate the residual bound after {round_} rounds",
                sol)
        refined += len(violating)
        grid = grid.split(violating)
        round_ += 1


# --- generalized solution --------------------------------------------------


@dataclass
class RegularityRow:
    component: int
    alpha: tuple[int, ...]
    cauchy: bool
    gap: float


@dataclass
class GeneralizedSolution:
    system: PdeSystem
    schedule: EpsSchedule
    grid: Grid  # common refinement of all approximation grids
    approximations: list[ApproxSolution]
    v: list[tuple[NlscFunction, ...]]
    t_images: list[tuple[NlscFunction, ...]]
    certificate: ConvergenceReport
    cauchy: ConvergenceReport | None
    regularity: list[RegularityRow] = field(default_factory=list)
    density: int = 3

    @property
    def ok(self) -> bool:
        return self.certificate.ok and (self.cauchy is None or self.cauchy.ok)


def assemble_generalized_solution(sys: PdeSystem, grid: Grid, schedule: EpsSchedule,
                                  degree: int = 1, seed=0,
                                  options: SolverOptions | None = None,
                                  tol: float | None = None) -> GeneralizedSolution:
    """Approximations for every eps of ``schedule`` and the certificates of their T-images.

    ``tol`` (default ``2 * eps_N``) is used for both the order-convergence
    certificate and the Cauchy test.
    """
    opts = options or SolverOptions()
    if not isinstance(schedule, EpsSchedule):
        schedule = EpsSchedule(tuple(schedule))
    base = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    approx = [build_approximation(sys, grid, eps, degree, base + [n], opts)
              for n, eps in enumerate(schedule.values, start=1)]
    common = approx[0].grid
    for a in approx[1:]:
        common = common.common_refinement(a.grid)
    v = [tuple(nlsc_regularize(refine_to(c, common)) for c in a.u_eps) for a in approx]
    t_images = [apply_T(sys, vn) for vn in v]

    f = tuple(sys.rhs_function(common, j) for j in range(sys.spec.K))
    bounds = [tuple(OrderInterval(offset(fj, -eps), fj) for fj in f) for eps in schedule.values]
    seq = FunctionSequence.of(t_images)
    tol = 2 * schedule.values[-1] if tol is None else tol
    cert = order_convergence_report(seq, bounds, f, tol=tol, density=opts.density)
    cauchy = cauchy_report(seq, tol=tol, density=opts.density) if len(seq) >= 2 else None
    gsol = GeneralizedSolution(sys, schedule, common, approx, v, t_images, cert, cauchy,
                               density=opts.density)
    if len(approx) >= 3:
        gsol.regularity = check_regularity_identification(gsol)
    return gsol


def check_regularity_identification(gsol: GeneralizedSolution, tol: float | None = None):
    """Cauchy verdict of ``D^alpha v_n`` for every component and ``|alpha| <= m``."""
    if len(gsol.v) < 3:
        raise ValueError("regularity report needs at least three approximations")
    tol = gsol.schedule.values[-1] if tol is None else tol
    rows = []
    spec = gsol.system.spec
    for i in range(spec.K):
        for a in spec.multi_indices:
            seq = FunctionSequence.of([derivative(vn[i], a) for vn in gsol.v])
            rep = cauchy_report(seq, tol=tol, density=gsol.density)
            rows.append(RegularityRow(i + 1, a, rep.ok, rep.final_gap))
    return rows
