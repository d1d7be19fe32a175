"""Projected Nelder-Mead simplex search.

Each trial point is passed through a projection before it is evaluated, so
the simplex never leaves the feasible set. The search works in coordinates
scaled by ``scale`` (usually the box widths). After convergence the method
restarts from the best vertex with a fresh simplex; it stops once a restart
no longer improves the objective, which guards against simplices that
collapsed onto a constraint face.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    nfev: int
    converged: bool


def _initial_simplex(z0, step, to_theta, project, scale):
    d = z0.size
    verts = [z0]
    for i in range(d):
        for sgn in (1.0, -1.0):
            z = z0.copy()
            z[i] += sgn * step
            zp = project(to_theta(z)) / scale
            if np.max(np.abs(zp - z0)) > 1e-3 * step:
                break
        verts.append(zp)
    return np.array(verts)


def projected_nelder_mead(fun, x0, project, scale, step=0.05, xtol=1e-7, ftol=1e-10,
                          max_iter=None, max_restarts=3) -> SimplexResult:
    """Minimise ``fun`` over the image of ``project``.

    Convergence requires both the simplex diameter (max-norm, scaled units)
    below ``xtol`` and the spread of vertex values below ``ftol``.
    """
    scale = np.asarray(scale, dtype=float)
    d = scale.size
    max_iter = max_iter or 2000 * d
    to_theta = lambda z: z * scale  # noqa: E731
    nfev = 0

    def f(z):
        nonlocal nfev
        nfev += 1
        v = fun(to_theta(z))
        return v if np.isfinite(v) else np.inf

    def proj(z):
        return project(to_theta(z)) / scale

    best_z = proj(np.asarray(x0, dtype=float) / scale)
    best_f = f(best_z)
    total_iter = 0
    converged = False
    for attempt in range(max_restarts + 1):
        sim = _initial_simplex(best_z, step, to_theta, project, scale)
        fs = np.array([best_f] + [f(v) for v in sim[1:]])
        converged = False
        it = 0
        while it < max_iter:
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            diam = np.max(np.abs(sim[1:] - sim[0]))
            if diam < xtol and fs[-1] - fs[0] < ftol:
                converged = True
                break
            it += 1
            centroid = sim[:-1].mean(axis=0)
            xr = proj(centroid + (centroid - sim[-1]))
            fr = f(xr)
            if fr < fs[0]:
                xe = proj(centroid + 2.0 * (centroid - sim[-1]))
                fe = f(xe)
                if fe < fr:
                    sim[-1], fs[-1] = xe, fe
                else:
                    sim[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-2]:
                sim[-1], fs[-1] = xr, fr
                continue
            if fr < fs[-1]:
                xc = proj(centroid + 0.5 * (xr - centroid))
                fc = f(xc)
                if fc <= fr:
                    sim[-1], fs[-1] = xc, fc
                    continue
            else:
                xc = proj(centroid + 0.5 * (sim[-1] - centroid))
                fc = f(xc)
                if fc < fs[-1]:
                    sim[-1], fs[-1] = xc, fc
                    continue
            for j in range(1, d + 1):
                sim[j] = proj(sim[0] + 0.5 * (sim[j] - sim[0]))
                fs[j] = f(sim[j])
        total_iter += it
        j = int(np.argmin(fs))
        improved = best_f - fs[j]
        if fs[j] <= best_f:
            best_z, best_f = sim[j].copy(), float(fs[j])
        if not converged or (attempt > 0 and improved < ftol):
            break
    return SimplexResult(to_theta(best_z), float(best_f), total_iter, nfev, converged)
