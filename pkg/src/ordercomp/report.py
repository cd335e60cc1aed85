"""``OCRUN 1`` run reports: a version line followed by key-sorted JSON."""

from __future__ import annotations

import json
import math

from .nlsc import ConvergenceReport
from .solver import GeneralizedSolution

HEADER = "OCRUN 1"


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float):
        return _num(obj)
    return obj


def convergence_block(rep: ConvergenceReport | None) -> dict | None:
    if rep is None:
        return None
    return {"ok": bool(rep.ok), "gaps": rep.gaps, "final_gap": rep.final_gap, "tol": rep.tol,
            "reasons": list(rep.reasons)}


def build_report(gsol: GeneralizedSolution, config: dict | None = None, timing: bool = False,
                 status: int | None = None) -> dict:
    eps_blocks = []
    for n, a in enumerate(gsol.approximations, start=1):
        b = {
            "n": n,
            "eps": a.eps,
            "cells": a.grid.ncells,
            "cells_refined": a.cells_refined,
            "refine_rounds": a.refine_rounds,
            "residual_min": list(a.residual_lo),
            "residual_max": list(a.residual_hi),
            "verify_density": a.verify_density,
            "verify_points": a.verify_points,
            "within_bounds": a.verified,
        }
        if timing:
            b["seconds"] = a.seconds
        eps_blocks.append(b)
    out = {
        "eps": eps_blocks,
        "certificate": convergence_block(gsol.certificate),
        "cauchy": convergence_block(gsol.cauchy),
        "regularity": [{"component": r.component, "alpha": list(r.alpha), "cauchy": r.cauchy,
                        "gap": r.gap} for r in gsol.regularity],
        "common_cells": gsol.grid.ncells,
        "ok": gsol.ok,
    }
    if config is not None:
        out["config"] = config
    if status is not None:
        out["exit_status"] = status
    return out


def dumps_report(report: dict) -> str:
    return HEADER + "\n" + json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def loads_report(text: str) -> dict:
    head, _, body = text.partition("\n")
    if head.strip() != HEADER:
        raise ValueError(f"not an {HEADER} report")
    return json.loads(body)
