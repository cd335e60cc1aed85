"""Run configuration: INI-style text with ``[domain] [pde] [solver] [output]`` sections.

Example::

    [domain]
    lower = 0
    upper = 1
    cells = 64

    [pde]
    m = 1
    F = (D[1]u1)^2
    f = 1

    [solver]
    schedule = harmonic 20
    degree = 1
    seed = 0

Lists (``lower``, ``upper``, ``cells``, ``schedule``) are whitespace
separated; systems give one expression per ``;``-separated item.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .expr import ExprError
from .nlsc import Grid
from .pde import PdeSystem
from .solver import EpsSchedule, SolverOptions


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DomainConfig:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]

    def grid(self) -> Grid:
        return Grid.uniform(self.lower, self.upper, self.cells)


@dataclass(frozen=True)
class PdeConfig:
    m: int
    F: tuple[str, ...]
    f: tuple[str, ...]
    k: float = math.inf


@dataclass(frozen=True)
class SolverConfig:
    schedule: tuple[float, ...] = tuple(1.0 / n for n in range(1, 21))
    degree: int = 1
    seed: int = 0
    box: tuple[float, float] = (-2.0, 2.0)
    samples: int = 256
    max_restarts: int = 8
    density: int = 3
    verify_factor: int = 10
    max_refine: int = 16
    newton_tol: float = 1e-13
    tol: float | None = None  # certificate tolerance; default 2 * eps_N
    workers: int = 1


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "run"
    dumps: bool = True
    timing: bool = False


@dataclass(frozen=True)
class RunConfig:
    domain: DomainConfig
    pde: PdeConfig
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def n(self) -> int:
        return len(self.domain.lower)

    def system(self) -> PdeSystem:
        try:
            return PdeSystem.from_strings(self.n, self.pde.m, self.pde.F, self.pde.f, self.pde.k)
        except ExprError as exc:
            raise ConfigError(f"pde: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"pde: {exc}") from None

    def schedule(self) -> EpsSchedule:
        return EpsSchedule(self.solver.schedule)

    def options(self) -> SolverOptions:
        s = self.solver
        return SolverOptions(box=s.box, samples=s.samples, max_restarts=s.max_restarts,
                             density=s.density, verify_factor=s.verify_factor,
                             max_refine=s.max_refine, newton_tol=s.newton_tol, workers=s.workers)

    def with_overrides(self, **kw) -> "RunConfig":
        """Replace solver/output fields given as keyword arguments (``None`` is ignored)."""
        solver_keys = {f for f in asdict(self.solver)}
        out_keys = {f for f in asdict(self.output)}
        s = {k: v for k, v in kw.items() if v is not None and k in solver_keys}
        o = {k: v for k, v in kw.items() if v is not None and k in out_keys}
        return replace(self, solver=replace(self.solver, **s), output=replace(self.output, **o))

    def snapshot(self) -> dict:
        """Everything that determines the run; the artifact directory is left out."""
        d = asdict(self)
        d["pde"]["k"] = None if math.isinf(self.pde.k) else self.pde.k
        del d["output"]["dir"]
        return d


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split())
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{key}: empty list")
    return vals


def _ints(text: str, key: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split())
    except ValueError:
        raise ConfigError(f"{key}: expected integers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{key}: empty list")
    return vals


def _schedule(text: str) -> tuple[float, ...]:
    toks = text.split()
    if toks and toks[0] == "harmonic":
        if len(toks) != 2 or not toks[1].isdigit() or int(toks[1]) < 1:
            raise ConfigError("schedule: expected 'harmonic N' with N >= 1")
        return tuple(1.0 / n for n in range(1, int(toks[1]) + 1))
    vals = _floats(text, "schedule")
    try:
        EpsSchedule(vals)
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None
    return vals


def _get(sec, key, conv, default=None, required=False):
    if key not in sec:
        if required:
            raise ConfigError(f"[{sec.name}] missing key {key!r}")
        return default
    raw = sec[key]
    try:
        return conv(raw)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key}: bad value {raw!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(text)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # F and f are distinct keys
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    for name in ("domain", "pde"):
        if name not in cp:
            raise ConfigError(f"missing section [{name}]")
    unknown = set(cp.sections()) - {"domain", "pde", "solver", "output"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    d = cp["domain"]
    lower = _get(d, "lower", lambda t: _floats(t, "lower"), required=True)
    upper = _get(d, "upper", lambda t: _floats(t, "upper"), required=True)
    cells = _get(d, "cells", lambda t: _ints(t, "cells"), required=True)
    if len(cells) == 1 and len(lower) > 1:
        cells = cells * len(lower)
    if not (len(lower) == len(upper) == len(cells)):
        raise ConfigError("domain: lower, upper and cells must have the same length")
    if any(a >= b for a, b in zip(lower, upper)) or any(c < 1 for c in cells):
        raise ConfigError("domain: need lower < upper and at least one cell per axis")

    p = cp["pde"]
    split = lambda t: tuple(s.strip() for s in t.split(";") if s.strip())
    F = _get(p, "F", split, required=True)
    f = _get(p, "f", split, required=True)
    if len(F) != len(f):
        raise ConfigError("pde: F and f must list the same number of equations")
    K = _get(p, "K", int, len(F))
    if K != len(F):
        raise ConfigError(f"pde: K={K} but {len(F)} equation(s) given")
    pde = PdeConfig(m=_get(p, "m", int, required=True), F=F, f=f,
                    k=_get(p, "k", lambda t: math.inf if t.strip() == "inf" else float(t), math.inf))
    if pde.m < 0:
        raise ConfigError("pde: m must be non-negative")

    base = SolverConfig()
    if "solver" in cp:
        s = cp["solver"]
        box = _get(s, "box", lambda t: _floats(t, "box"), base.box)
        if len(box) != 2 or box[0] >= box[1]:
            raise ConfigError("solver: box must be 'lo hi' with lo < hi")
        solver = SolverConfig(
            schedule=_get(s, "schedule", _schedule, base.schedule),
            degree=_get(s, "degree", int, base.degree),
            seed=_get(s, "seed", int, base.seed),
            box=tuple(box),
            samples=_get(s, "samples", int, base.samples),
            max_restarts=_get(s, "max_restarts", int, base.max_restarts),
            density=_get(s, "density", int, base.density),
            verify_factor=_get(s, "verify_factor", int, base.verify_factor),
            max_refine=_get(s, "max_refine", int, base.max_refine),
            newton_tol=_get(s, "newton_tol", float, base.newton_tol),
            tol=_get(s, "tol", float, None),
            workers=_get(s, "workers", int, base.workers),
        )
    else:
        solver = base
    if solver.degree < pde.m:
        raise ConfigError(f"solver: degree {solver.degree} < order m={pde.m}")
    if solver.samples < 1 or solver.density < 1 or solver.verify_factor < 1 or solver.max_refine < 0:
        raise ConfigError("solver: samples, density and verify_factor must be positive")

    out = OutputConfig()
    if "output" in cp:
        o = cp["output"]
        out = OutputConfig(dir=_get(o, "dir", str, out.dir), dumps=_get(o, "dumps", _bool, out.dumps),
                           timing=_get(o, "timing", _bool, out.timing))
    cfg = RunConfig(DomainConfig(lower, upper, cells), pde, solver, out)
    cfg.system()  # surface expression errors at load time
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)
