"""``ordercomp`` command line.

Exit codes: 0 success, 1 negative verdict, 2 configuration/format/parse
error, 3 admissibility not verified, 4 refinement exhausted.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import nlscf
from .config import ConfigError, load_config
from .expr import ExprError, jet_variables, parse_expression, to_text
from .lab.catalog import DEFAULT_CATALOG, CatalogError, format_table, parse_catalog, run_catalog
from .nlsc import GridMismatch, baire_lower, baire_upper, lattice_inf, lattice_sup, nlsc_regularize
from .report import build_report, dumps_report
from .solver import (
    AdmissibilityError,
    NoWitnessError,
    RefinementExhausted,
    _cell_residuals,
    assemble_generalized_solution,
)

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_ADMISSIBILITY, EXIT_REFINEMENT = 0, 1, 2, 3, 4


def _err(msg: str) -> None:
    print(f"ordercomp: {msg}", file=sys.stderr)


def _load_cfg(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, verify_factor=args.verify_factor, tol=args.tol,
                              density=args.density, dir=args.out_dir)


def cmd_solve(args) -> int:
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INPUT
    s = cfg.solver
    try:
        gsol = assemble_generalized_solution(cfg.system(), cfg.domain.grid(), cfg.schedule(),
                                             s.degree, s.seed, cfg.options(), tol=s.tol)
    except AdmissibilityError as exc:
        _err(f"{exc}; failing points:")
        for p in exc.points:
            print("  " + " ".join(repr(c) for c in p), file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except (RefinementExhausted, NoWitnessError) as exc:
        _err(str(exc))
        return EXIT_REFINEMENT
    status = EXIT_OK if gsol.ok else EXIT_FALSE
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.output.dumps:
        width = len(str(len(gsol.approximations)))
        for n, a in enumerate(gsol.approximations, start=1):
            (out / f"eps_{n:0{width}d}.nlscf").write_text(nlscf.dumps_many(a.u_eps))
    report = build_report(gsol, cfg.snapshot(), timing=args.timing, status=status)
    (out / "report.ocrun").write_text(dumps_report(report))
    for b in report["eps"]:
        print(f"eps={b['eps']:.6g} cells={b['cells']} refined={b['cells_refined']} "
              f"residual=[{min(b['residual_min']):.6g}, {max(b['residual_max']):.6g}]")
    print(f"certificate: {'ok' if gsol.certificate.ok else 'FAILED'} "
          f"(final gap {gsol.certificate.final_gap:.6g}, tol {gsol.certificate.tol:.6g})")
    if gsol.cauchy is not None:
        print(f"cauchy: {'ok' if gsol.cauchy.ok else 'FAILED'} (envelope gap {gsol.cauchy.final_gap:.6g})")
    print(f"wrote {out}")
    return status


def cmd_verify(args) -> int:
    try:
        cfg = _load_cfg(args)
        sys_ = cfg.system()
        us = nlscf.load(args.dump)
    except (ConfigError, nlscf.DumpFormatError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    if len(us) != sys_.spec.K or any(u.grid != us[0].grid for u in us):
        _err(f"dump holds {len(us)} function(s) on mismatched grids; expected {sys_.spec.K}")
        return EXIT_INPUT
    if us[0].grid.n != sys_.spec.n:
        _err("dump dimension does not match the configured domain")
        return EXIT_INPUT
    eps = args.eps
    density = args.density if args.density is not None else cfg.solver.verify_factor * cfg.solver.density
    grid = us[0].grid
    pieces = [u.pieces for u in us]
    bad = []
    lo, hi = np.inf, -np.inf
    for k in range(grid.ncells):
        r = _cell_residuals(sys_, grid, pieces, k, density)
        lo, hi = min(lo, float(r.min())), max(hi, float(r.max()))
        if np.any(r < -eps) or np.any(r > 0):
            bad.append((k, float(r.min()), float(r.max())))
    print(f"verified {grid.ncells} cells at density {density}: residual in [{lo:.6g}, {hi:.6g}], eps={eps:g}")
    for k, a, b in bad:
        print(f"violation in cell {grid.multi(k)}: residual in [{a:.6g}, {b:.6g}]")
    return EXIT_FALSE if bad else EXIT_OK


def cmd_lab(args) -> int:
    path = Path(args.catalog) if args.catalog else DEFAULT_CATALOG
    try:
        outcomes = run_catalog(parse_catalog(path.read_text()))
    except (CatalogError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    print(format_table(outcomes))
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_FALSE


def cmd_parse(args) -> int:
    try:
        e = parse_expression(args.expression, args.n, args.m, args.K)
    except ExprError as exc:
        _err(str(exc))
        return EXIT_INPUT
    print(to_text(e))
    jets = sorted(to_text(v) for v in jet_variables(e))
    print("jet variables: " + (", ".join(jets) if jets else "(none)"))
    return EXIT_OK


_BAIRE = {"I": baire_lower, "S": baire_upper, "IS": nlsc_regularize}


def _emit(funcs, out) -> None:
    text = nlscf.dumps_many(funcs)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_baire(args) -> int:
    try:
        us = nlscf.load(args.dump)
    except (nlscf.DumpFormatError, OSError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    _emit([_BAIRE[args.op](u) for u in us], args.output)
    return EXIT_OK


def cmd_lattice(args) -> int:
    try:
        a, b = nlscf.load(args.first), nlscf.load(args.second)
        if len(a) != len(b):
            raise nlscf.DumpFormatError("dumps hold different numbers of functions")
        op = lattice_sup if args.op == "sup" else lattice_inf
        density = args.density if args.density is not None else 3
        res = [op(u, v, density) for u, v in zip(a, b)]
    except (nlscf.DumpFormatError, OSError, GridMismatch) as exc:
        _err(str(exc))
        return EXIT_INPUT
    _emit(res, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ordercomp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--verify-factor", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--out-dir")
        sp.add_argument("--density", type=int)

    sp = sub.add_parser("solve", help="build eps-approximations and certify their order convergence")
    run_flags(sp)
    sp.add_argument("--timing", action="store_true", help="record wall-clock seconds in the report")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("verify", help="re-check the residual bounds of a dump")
    sp.add_argument("dump")
    run_flags(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("lab", help="run a completion-lab scenario catalog")
    sp.add_argument("catalog", nargs="?")
    sp.set_defaults(fn=cmd_lab)

    sp = sub.add_parser("parse", help="print the canonical form of an expression")
    sp.add_argument("expression")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--m", type=int, default=1)
    sp.add_argument("--K", type=int, default=1)
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("baire", help="apply I, S or I∘S to a dump")
    sp.add_argument("dump")
    sp.add_argument("--op", choices=sorted(_BAIRE), default="IS")
    sp.add_argument("--output", "-o")
    sp.set_defaults(fn=cmd_baire)

    sp = sub.add_parser("lattice", help="pointwise sup or inf of two dumps")
    sp.add_argument("first")
    sp.add_argument("second")
    sp.add_argument("--op", choices=("sup", "inf"), default="sup")
    sp.add_argument("--density", type=int)
    sp.add_argument("--output", "-o")
    sp.set_defaults(fn=cmd_lattice)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
