"""Trajectories of the observation-driven recursion and of its couplings.

Three simulators share one kernel layout:

* :func:`simulate` draws ``Y_{k+1} ~ H(X_k)`` and sets ``X_{k+1} = f_{Y_{k+1}}(X_k)``.
* :func:`simulate_coupled` runs two chains through the Poisson thinning
  coupling and records the coin ``U_k = 1{Y_k = Y'_k}``.
* :func:`simulate_qsharp` drives both chains with one shared innovation drawn
  at the smaller rate, i.e. the coupling conditioned on ``U = 1``.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DivergenceError, DomainError
from .model import GARCH, LOGLINEAR, MAX_RATE, THRESHOLD, Family, ModelSpec, _link, as_observations
from .sampling import RngStream, _poisson

_LOG_MAX_RATE = math.log(MAX_RATE)
DEFAULT_BURN_IN = 1000


@dataclass
class Trajectory:
    """States ``x[0..n]`` and observations ``y[1..n]`` (stored as ``y[0..n-1]``)."""

    x: np.ndarray
    y: np.ndarray
    model: ModelSpec
    seed: tuple = (None, None)
    burn_in: int = 0
    history: np.ndarray = field(default=None, repr=False)  # burn-in observations, chronological

    def __post_init__(self):
        if len(self.x) != len(self.y) + 1:
            raise ValueError("trajectory needs len(x) == len(y) + 1")

    @property
    def n(self) -> int:
        return len(self.y)

    def to_csv(self, path_or_buf=None) -> str:
        """Write ``k,x,y`` rows (``y`` blank at ``k = 0``); reals use shortest round-trip repr."""
        buf = io.StringIO()
        buf.write("k,x,y\n")
        count = self.model.family.is_count
        buf.write(f"0,{float(self.x[0])!r},\n")
        for k in range(1, len(self.x)):
            yk = self.y[k - 1]
            ys = str(int(yk)) if count else repr(float(yk))
            buf.write(f"{k},{float(self.x[k])!r},{ys}\n")
        text = buf.getvalue()
        if path_or_buf is not None:
            if isinstance(path_or_buf, (str, os.PathLike)):
                with open(path_or_buf, "w", newline="") as fh:
                    fh.write(text)
            else:
                path_or_buf.write(text)
        return text


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back ``(x, y)`` arrays written by :meth:`Trajectory.to_csv`."""
    xs, ys = [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "k,x,y":
            raise ValueError(f"unexpected trajectory header {header!r}")
        for line in fh:
            k, x, y = line.rstrip("\n").split(",")
            xs.append(float(x))
            if y != "":
                ys.append(float(y))
    return np.array(xs), np.array(ys)


@dataclass
class CoupledPath:
    x: np.ndarray
    x_prime: np.ndarray
    u: np.ndarray  # u[k-1] is the coin of step k
    t_fail: float  # first step with u = 0, math.inf if none
    y: np.ndarray = field(default=None, repr=False)
    y_prime: np.ndarray = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _rate(code, x):
    # -1 marks an overflow
    if code == LOGLINEAR:
        if x > _LOG_MAX_RATE:
            return -1.0
        return math.exp(x)
    if not (x <= MAX_RATE):
        return -1.0
    return max(x, 0.0)


@numba.njit(cache=True)
def _simulate_kernel(code, p, x0, n, gen, xs, ys):
    x = x0
    xs[0] = x0
    for k in range(n):
        if code == GARCH:
            if not (x <= 1e150):
                return k + 1
            y = math.sqrt(x) * gen.standard_normal()
        else:
            lam = _rate(code, x)
            if lam < 0:
                return k + 1
            y = float(_poisson(gen, lam))
        x = _link(code, p, x, y)
        xs[k + 1] = x
        ys[k] = y
    return -1


@numba.njit(cache=True)
def _coupled_step(code, p, x, xp, gen):
    lam, lamp = _rate(code, x), _rate(code, xp)
    if lam < 0 or lamp < 0:
        return x, xp, -1.0, -1.0, -1
    if lam <= lamp:
        y = _poisson(gen, lam)
        v = _poisson(gen, lamp - lam)
        yp = y + v
    else:
        yp = _poisson(gen, lamp)
        v = _poisson(gen, lam - lamp)
        y = yp + v
    u = 1 if v == 0 else 0
    return _link(code, p, x, float(y)), _link(code, p, xp, float(yp)), float(y), float(yp), u


@numba.njit(cache=True)
def _qsharp_step(code, p, x, xp, gen):
    lam = _rate(code, min(x, xp))
    if lam < 0:
        return x, xp, -1.0, -1
    y = float(_poisson(gen, lam))
    return _link(code, p, x, y), _link(code, p, xp, y), y, 1


@numba.njit(cache=True)
def _coupled_kernel(code, p, x0, x0p, n, gen, xs, xps, ys, yps, us):
    xs[0], xps[0] = x0, x0p
    for k in range(n):
        x, xp, y, yp, u = _coupled_step(code, p, xs[k], xps[k], gen)
        if u < 0:
            return k + 1
        xs[k + 1], xps[k + 1], ys[k], yps[k], us[k] = x, xp, y, yp, u
    return -1


@numba.njit(cache=True)
def _qsharp_kernel(code, p, x0, x0p, n, gen, xs, xps, ys):
    xs[0], xps[0] = x0, x0p
    for k in range(n):
        x, xp, y, ok = _qsharp_step(code, p, xs[k], xps[k], gen)
        if ok < 0:
            return k + 1
        xs[k + 1], xps[k + 1], ys[k] = x, xp, y
    return -1


@numba.njit(cache=True)
def _alpha(code, x, xp):
    """Probability that the thinning coupling's innovations coincide."""
    if code == LOGLINEAR:
        hi, lo = max(x, xp), min(x, xp)
        return math.exp(-(math.exp(hi) - math.exp(lo)))
    return math.exp(-abs(x - xp))


@numba.njit(cache=True)
def _coupled_batch(code, p, x0, x0p, n, reps, gen):
    xn = np.empty(reps)
    xpn = np.empty(reps)
    alive = np.empty(reps)
    for r in range(reps):
        x, xp, ok = x0, x0p, 1.0
        for k in range(n):
            x, xp, y, yp, u = _coupled_step(code, p, x, xp, gen)
            if u < 0:
                raise OverflowError("rate overflow in coupled simulation")
            if u == 0:
                ok = 0.0
        xn[r], xpn[r], alive[r] = x, xp, ok
    return xn, xpn, alive


@numba.njit(cache=True)
def _qsharp_batch(code, p, x0, x0p, n, reps, gen):
    xn = np.empty(reps)
    xpn = np.empty(reps)
    weight = np.empty(reps)
    for r in range(reps):
        x, xp, w = x0, x0p, 1.0
        for k in range(n):
            w *= _alpha(code, x, xp)
            x, xp, y, ok = _qsharp_step(code, p, x, xp, gen)
            if ok < 0:
                raise OverflowError("rate overflow in Q# simulation")
        xn[r], xpn[r], weight[r] = x, xp, w
    return xn, xpn, weight


# ---------------------------------------------------------------------------
# public API


def default_initial_state(model: ModelSpec) -> float:
    return model.fixed_point()


def _initial_state(model, x0):
    x0 = default_initial_state(model) if x0 is None else float(x0)
    if not math.isfinite(x0):
        raise DomainError("initial state must be finite")
    if model.family is Family.THRESHOLD and x0 < 0:
        raise DomainError(f"threshold initial state must be nonnegative, got {x0}")
    if model.family is Family.GARCH and x0 <= 0:
        raise DomainError(f"GARCH initial variance must be positive, got {x0}")
    return x0


def _require_poisson(model):
    if model.family is Family.GARCH:
        raise DomainError("coupled simulation is defined for the Poisson families only")


def simulate(model: ModelSpec, x0=None, n: int = 1000, rng: RngStream | None = None,
             burn_in: int = DEFAULT_BURN_IN) -> Trajectory:
    """Simulate ``burn_in + n`` steps and return the last ``n``.

    The burn-in observations are kept on ``Trajectory.history`` for
    infinite-past likelihood approximations. Raises :class:`DivergenceError`
    naming the 1-based step (counted from the start of burn-in) at which a
    rate exceeded the overflow guard.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    rng = rng or RngStream(0)
    x0 = _initial_state(model, x0)
    total = burn_in + n
    xs = np.empty(total + 1)
    ys = np.empty(total)
    status = _simulate_kernel(model.code, model.kernel(), x0, total, rng.generator, xs, ys)
    if status >= 0:
        raise DivergenceError(status, state=float(xs[status - 1]))
    if model.family.is_count:
        ys = ys.astype(np.int64)
    return Trajectory(x=xs[burn_in:].copy(), y=ys[burn_in:].copy(), model=model,
                      seed=(rng.seed, rng.stream_id), burn_in=burn_in, history=ys[:burn_in].copy())


def simulate_coupled(model: ModelSpec, x0, x0_prime, n: int, rng: RngStream) -> CoupledPath:
    """Two chains through the thinning coupling; each is marginally a ``simulate`` chain."""
    _require_poisson(model)
    x0, x0p = _initial_state(model, x0), _initial_state(model, x0_prime)
    xs, xps = np.empty(n + 1), np.empty(n + 1)
    ys, yps = np.empty(n), np.empty(n)
    us = np.empty(n, dtype=np.int64)
    status = _coupled_kernel(model.code, model.kernel(), x0, x0p, n, rng.generator, xs, xps, ys, yps, us)
    if status >= 0:
        raise DivergenceError(status)
    fails = np.flatnonzero(us == 0)
    t_fail = float(fails[0] + 1) if fails.size else math.inf
    return CoupledPath(xs, xps, us, t_fail, ys.astype(np.int64), yps.astype(np.int64))


def simulate_qsharp(model: ModelSpec, x0, x0_prime, n: int, rng: RngStream) -> CoupledPath:
    """Both chains driven by one Poisson innovation at the smaller rate."""
    _require_poisson(model)
    x0, x0p = _initial_state(model, x0), _initial_state(model, x0_prime)
    xs, xps = np.empty(n + 1), np.empty(n + 1)
    ys = np.empty(n)
    status = _qsharp_kernel(model.code, model.kernel(), x0, x0p, n, rng.generator, xs, xps, ys)
    if status >= 0:
        raise DivergenceError(status)
    y = ys.astype(np.int64)
    return CoupledPath(xs, xps, np.ones(n, dtype=np.int64), math.inf, y, y.copy())


def coupling_probability(model: ModelSpec, x, x_prime) -> float:
    """``alpha(x, x')``: exp(-|rate gap|) under Poisson thinning."""
    _require_poisson(model)
    return float(_alpha(model.code, float(x), float(x_prime)))


def replay(model: ModelSpec, x0, y) -> np.ndarray:
    """States obtained by pushing ``y`` through the link from ``x0``."""
    from .model import _run_states

    return _run_states(model.code, model.kernel(), float(x0), as_observations(model, y))
