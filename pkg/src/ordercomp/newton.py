"""Damped Gauss-Newton for (possibly underdetermined) square-or-wide systems."""

from __future__ import annotations

import numpy as np


def damped_newton(residual, jacobian, x0, tol: float = 1e-12, max_iter: int = 60,
                  max_halvings: int = 40):
    """Minimise ``|residual(x)|`` from ``x0``.

    Steps are minimum-norm least-squares solutions of ``J dx = -r``, halved
    until the max-norm of the residual decreases.  Returns ``(x, |r|_inf)``.
    Domain errors during a trial step count as a failed trial.
    """
    x = np.array(x0, dtype=float)
    try:
        r = np.asarray(residual(x), dtype=float)
    except ArithmeticError:
        return x, np.inf
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if norm <= tol:
            break
        J = np.asarray(jacobian(x), dtype=float).reshape(len(r), len(x))
        if not np.all(np.isfinite(J)):
            break
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        t = 1.0
        for _ in range(max_halvings):
            cand = x + t * step
            try:
                rc = np.asarray(residual(cand), dtype=float)
                nc = float(np.max(np.abs(rc)))
            except ArithmeticError:
                nc = np.inf
            if np.isfinite(nc) and nc < norm:
                x, r, norm = cand, rc, nc
                break
            t *= 0.5
        else:
            break
    return x, norm
