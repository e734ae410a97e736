"""Derivative-free downhill simplex minimiser."""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidParameterError


class SimplexResult(NamedTuple):
    x: np.ndarray
    fun: float
    nit: int
    converged: bool
    nfev: int


def nelder_mead(objective: Callable[[np.ndarray], float], x0, *, step=None, xtol: float = 1e-8,
                ftol: float = 0.0, maxiter: int = 2000, alpha: float = 1.0, gamma: float = 2.0,
                rho: float = 0.5, sigma: float = 0.5) -> SimplexResult:
    """Minimise ``objective`` starting from ``x0``.

    Stops once the simplex diameter (max vertex distance from the best
    vertex) drops below ``xtol`` and the spread of vertex values is at most
    ``ftol``, or after ``maxiter`` iterations with ``converged=False``.

    ``step`` sets the initial simplex edge per coordinate; by default 5% of
    the coordinate, or 2.5e-4 for zero coordinates.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    if step is None:
        step = np.where(x0 != 0, 0.05 * x0, 2.5e-4)
    step = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        return float(objective(x))

    simplex = np.vstack([x0] + [x0 + np.eye(n)[i] * step[i] for i in range(n)])
    fvals = np.array([f(v) for v in simplex])
    if not np.isfinite(fvals[0]):
        raise InvalidParameterError("objective is not finite at x0")

    nit = 0
    converged = False
    while nit < maxiter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        diam = np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1))
        if diam < xtol and fvals[-1] - fvals[0] <= ftol:
            converged = True
            break
        nit += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + gamma * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + rho * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid + rho * (worst - centroid)
            fc = f(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        simplex[1:] = simplex[0] + sigma * (simplex[1:] - simplex[0])
        fvals[1:] = [f(v) for v in simplex[1:]]

    best = int(np.argmin(fvals))
    return SimplexResult(simplex[best].copy(), float(fvals[best]), nit, converged, nfev)
