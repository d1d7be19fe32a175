"""Numerical certificates for the stability hypotheses of the Poisson families.

Everything labelled "exact" here is a finite Poisson sum: either over a finite
regime set, or over the support truncated by :func:`odts.model.poisson_weights`
with the truncation error certified by doubling the tail allowance. The
coupling quantities follow the thinning construction used by
:mod:`odts.simulate`:

* ``alpha(x, x')`` is the probability that both innovations coincide;
* ``W`` is ``1`` for the threshold family and ``exp(|x v x'|)`` for the
  log-linear family, so ``1 - alpha <= |x - x'| W``;
* ``Q#`` moves both chains with a single Poisson draw at the smaller rate.

Certification is at grid resolution: a passing verdict means the inequality
holds on every grid point evaluated, not for every state.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.stats import poisson

from .errors import DomainError
from .model import (
    LOGLINEAR,
    MAX_RATE,
    THRESHOLD,
    Family,
    LogLinearParams,
    ModelSpec,
    ThresholdParams,
    _link,
    poisson_weights,
)
from .sampling import RngStream, _poisson
from .simulate import _coupled_batch, _qsharp_batch, simulate

LAMBDA_MARGIN = 1e-6
CERTIFY_TOL = 1e-10
_LOG_MAX_RATE = math.log(MAX_RATE)


def threshold_drift_grid() -> np.ndarray:
    return 2.0 ** np.arange(-3, 13)


def loglinear_drift_grid() -> np.ndarray:
    return np.arange(-32, 33) * 0.25


def pair_grid(values, values_prime=None) -> np.ndarray:
    """All ``(x, x')`` pairs of a tensor grid, shape ``(k, 2)``."""
    v = np.asarray(values, dtype=float)
    vp = v if values_prime is None else np.asarray(values_prime, dtype=float)
    xx, yy = np.meshgrid(v, vp, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


def _as_pairs(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1, 2)
    if g.shape[0] == 0:
        raise ValueError("grid must contain at least one pair")
    return g


# ---------------------------------------------------------------------------
# reports


@dataclass
class DriftReport:
    """``QV <= lambda_hat V + beta_hat`` evaluated on a state grid."""

    grid: np.ndarray
    qv: np.ndarray
    v: np.ndarray
    ratio: np.ndarray
    lambda_hat: float
    beta_hat: float
    tail: np.ndarray = field(repr=False)
    verdict: bool = False

    @property
    def margin(self) -> float:
        """Largest ``QV - (lambda_hat V + beta_hat)``; nonpositive by construction."""
        return float(np.max(self.qv - self.lambda_hat * self.v - self.beta_hat))

    @property
    def worst_state(self) -> float:
        t = np.flatnonzero(self.tail)
        return float(self.grid[t[np.argmax(self.ratio[t])]])


@dataclass
class CouplingReport:
    """Coupling-condition results; each checker fills its own fields."""

    rho_hat: float | None = None
    expected_rho: float | None = None
    alpha_deficit_max: float | None = None
    qsharp_w_margin: float | None = None
    beta_hat: float | None = None
    truncation_error: float | None = None
    verdicts: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)

    def merge(self, other: "CouplingReport") -> "CouplingReport":
        out = CouplingReport(**{k: v for k, v in self.__dict__.items() if not isinstance(v, dict)})
        for k, v in other.__dict__.items():
            if not isinstance(v, dict) and v is not None:
                setattr(out, k, v)
        for name in ("verdicts", "worst", "margins"):
            setattr(out, name, {**getattr(self, name), **getattr(other, name)})
        return out

    @property
    def verdict(self) -> bool:
        return all(self.verdicts.values())


@dataclass(frozen=True)
class IdentityEstimate:
    """Monte Carlo estimates of both sides of the coupling identity."""

    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float

    @property
    def z(self) -> float:
        se = math.hypot(self.lhs_se, self.rhs_se)
        if se == 0:
            return 0.0 if self.lhs == self.rhs else math.inf
        return abs(self.lhs - self.rhs) / se

    def agree(self, k: float = 5.0) -> bool:
        return self.z <= k


@dataclass(frozen=True)
class MomentCheck:
    empirical: float
    se: float
    bound: float
    horizon: int

    @property
    def verdict(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.se


# ---------------------------------------------------------------------------
# drift


def regime_moments(lam: float, L: float, U: float) -> tuple[float, float]:
    """``P[N notin (L, U)]`` and ``E[N 1{N notin (L, U)}]`` for ``N ~ Poisson(lam)``.

    Both use a finite sum: over the counts inside ``(L, U)`` when ``U`` is
    finite (then complemented), over the counts ``<= L`` otherwise.
    """
    lam = float(lam)
    if not (0 <= lam <= MAX_RATE):
        raise DomainError(f"Poisson rate must lie in [0, {MAX_RATE:g}], got {lam}")
    lo = max(0, math.floor(L) + 1)
    if math.isinf(U):
        ks = np.arange(0, max(lo, 0))
        pmf = poisson.pmf(ks, lam)
        return float(pmf.sum()), float((ks * pmf).sum())
    hi = math.ceil(U) - 1
    ks = np.arange(lo, hi + 1)
    pmf = poisson.pmf(ks, lam) if ks.size else np.zeros(0)
    p_in, e_in = float(pmf.sum()), float((ks * pmf).sum())
    return max(1.0 - p_in, 0.0), max(lam - e_in, 0.0)


def drift_threshold_exact(params: ThresholdParams, x) -> float:
    """``QV(x)`` for ``V(x) = x``: the one-step mean of the threshold chain."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"drift is evaluated at positive states, got {x}")
    if x > MAX_RATE:
        raise DomainError(f"state {x:g} exceeds the overflow guard")
    p = params
    p_out, e_out = regime_moments(x, p.L, p.U)
    return p.omega + (p.a + p.b) * x + p.c * x * p_out + p.d * e_out


def _loglinear_qv(params: LogLinearParams, x: float, depth: int) -> float:
    ys, w = poisson_weights(math.exp(x), depth)
    z = params.d + params.a * x + params.b * np.log1p(ys)
    return float(np.sum(w * np.exp(np.abs(z))))


def _check_log_state(x) -> float:
    x = float(x)
    if not math.isfinite(x) or x > _LOG_MAX_RATE:
        raise DomainError(f"log-rate {x} exceeds the overflow guard")
    return x


def drift_loglinear_bound_check(params: LogLinearParams, x) -> tuple[float, float]:
    """``(QV(x), exp|d| (1 + 4 exp(gamma |x|)))`` with ``V(x) = exp|x|``."""
    x = _check_log_state(x)
    lhs = _loglinear_qv(params, x, 1)
    rhs = math.exp(abs(params.d)) * (1.0 + 4.0 * math.exp(params.gamma * abs(x)))
    return lhs, rhs


def _drift_report(grid, qv, v, tail) -> DriftReport:
    ratio = qv / v
    if not np.any(tail):
        raise ValueError("drift grid has no tail points")
    lam = float(np.max(ratio[tail])) + LAMBDA_MARGIN
    beta = max(float(np.max(qv - lam * v)), 0.0)
    verdict = bool(lam < 1 and math.isfinite(beta))
    return DriftReport(grid, qv, v, ratio, lam, beta, tail, verdict)


def threshold_drift_report(params: ThresholdParams, grid=None) -> DriftReport:
    """Drift constants for ``V(x) = x``; the tail is the upper half of the grid."""
    grid = threshold_drift_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    qv = np.array([drift_threshold_exact(params, x) for x in grid])
    tail = np.zeros(grid.size, dtype=bool)
    tail[grid.size // 2:] = True
    return _drift_report(grid, qv, grid.copy(), tail)


def loglinear_drift_report(params: LogLinearParams, grid=None, tail_from: float = 4.0) -> DriftReport:
    """Drift constants for ``V(x) = exp|x|``; the tail is ``|x| >= tail_from``."""
    grid = loglinear_drift_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    qv = np.array([_loglinear_qv(params, _check_log_state(x), 1) for x in grid])
    return _drift_report(grid, qv, np.exp(np.abs(grid)), np.abs(grid) >= tail_from)


def drift_report(model: ModelSpec, grid=None) -> DriftReport:
    if model.family is Family.THRESHOLD:
        return threshold_drift_report(model.params, grid)
    if model.family is Family.LOGLINEAR:
        return loglinear_drift_report(model.params, grid)
    raise DomainError("drift certificates are implemented for the Poisson families")


# ---------------------------------------------------------------------------
# coupling bounds


def _require_poisson(model):
    if model.family is Family.GARCH:
        raise DomainError("coupling checks are defined for the Poisson families only")


def one_minus_alpha(model: ModelSpec, x, xp) -> np.ndarray:
    """``1 - alpha(x, x')`` evaluated without cancellation."""
    _require_poisson(model)
    x, xp = np.asarray(x, dtype=float), np.asarray(xp, dtype=float)
    if model.family is Family.THRESHOLD:
        return -np.expm1(-np.abs(x - xp))
    hi, lo = np.maximum(x, xp), np.minimum(x, xp)
    return -np.expm1(-np.exp(lo) * np.expm1(hi - lo))


def coupling_weight(model: ModelSpec, x, xp) -> np.ndarray:
    """``W(x, x')``: constant one for threshold, ``exp|x v x'|`` for log-linear."""
    x, xp = np.asarray(x, dtype=float), np.asarray(xp, dtype=float)
    if model.family is Family.THRESHOLD:
        return np.ones(np.broadcast(x, xp).shape)
    return np.exp(np.abs(np.maximum(x, xp)))


def check_alpha_bound(model: ModelSpec, grid) -> CouplingReport:
    """Analytic ``max (1 - alpha) - |x - x'| W`` over the grid; pass iff ``<= 0``."""
    _require_poisson(model)
    g = _as_pairs(grid)
    x, xp = g[:, 0], g[:, 1]
    deficit = one_minus_alpha(model, x, xp) - np.abs(x - xp) * coupling_weight(model, x, xp)
    i = int(np.argmax(deficit))
    worst = float(deficit[i])
    return CouplingReport(alpha_deficit_max=worst, verdicts={"alpha_bound": worst <= 0.0},
                          worst={"alpha_bound": (float(x[i]), float(xp[i]))},
                          margins={"alpha_bound": worst})


@numba.njit(cache=True)
def _qsharp_one_step(code, p, xs, xps, reps, gen):
    k = xs.shape[0]
    x1 = np.empty((k, reps))
    x1p = np.empty((k, reps))
    ys = np.empty((k, reps))
    for i in range(k):
        lo = min(xs[i], xps[i])
        lam = math.exp(lo) if code == LOGLINEAR else lo
        for r in range(reps):
            y = float(_poisson(gen, lam))
            ys[i, r] = y
            x1[i, r] = _link(code, p, xs[i], y)
            x1p[i, r] = _link(code, p, xps[i], y)
    return x1, x1p, ys


def qsharp_one_step(model: ModelSpec, grid, replicates: int, rng: RngStream):
    """``replicates`` one-step ``Q#`` draws from every grid pair.

    Returns ``(X1, X1', Y)`` arrays of shape ``(pairs, replicates)``.
    """
    _require_poisson(model)
    g = _as_pairs(grid)
    lo = np.minimum(g[:, 0], g[:, 1])
    if model.family is Family.THRESHOLD and np.any(g < 0):
        raise DomainError("threshold states are nonnegative")
    if np.any((np.exp(lo) if model.family is Family.LOGLINEAR else lo) > MAX_RATE):
        raise DomainError("grid rate exceeds the overflow guard")
    return _qsharp_one_step(model.code, model.kernel(), np.ascontiguousarray(g[:, 0]),
                            np.ascontiguousarray(g[:, 1]), int(replicates), rng.generator)


def expected_contraction(model: ModelSpec, x, xp) -> float:
    """Exact ``E#|X1 - X1'| / |x - x'|`` (``|a|`` for log-linear)."""
    _require_poisson(model)
    p = model.params
    if model.family is Family.LOGLINEAR:
        return abs(p.a)
    p_out, _ = regime_moments(min(float(x), float(xp)), p.L, p.U)
    # a >= 0 and a + c >= 0 in the threshold family, so the slope is never negative
    return p.a + p.c * p_out


def check_qsharp_contraction(model: ModelSpec, grid, replicates: int, rng: RngStream,
                             tol: float = 1e-12) -> CouplingReport:
    """Pathwise one-step contraction under ``Q#``.

    Every replicate must satisfy ``|X1 - X1'| = s |x - x'|`` with slope
    ``s = |a|`` (log-linear) or ``s in {a, a + c}`` picked by the regime of
    the shared innovation (threshold), up to ``tol`` scaled by the state
    magnitude. The verdict is exact: no statistic is involved.
    """
    g = _as_pairs(grid)
    x1, x1p, ys = qsharp_one_step(model, g, replicates, rng)
    gap = np.abs(g[:, 0] - g[:, 1])[:, None]
    scale = np.maximum(1.0, np.maximum(np.abs(x1), np.abs(x1p)))
    diff = np.abs(x1 - x1p)
    p = model.params
    if model.family is Family.LOGLINEAR:
        slope = np.full_like(diff, abs(p.a))
        rho = abs(p.a)
    else:
        out = (ys <= p.L) | (ys >= p.U)
        slope = np.abs(np.where(out, p.a + p.c, p.a))
        rho = p.contraction
    err = np.abs(diff - slope * gap) / scale
    identity_ok = bool(np.all(err <= tol))
    moving = gap[:, 0] > 0
    factors = diff[moving] / gap[moving]
    rho_hat = float(factors.max()) if factors.size else 0.0
    bound_ok = bool(np.all(diff <= rho * gap + tol * scale)) and rho < 1
    exp_rho = max(expected_contraction(model, a, b) for a, b in g)
    i = int(np.argmax(err.max(axis=1)))
    return CouplingReport(
        rho_hat=rho_hat, expected_rho=float(exp_rho),
        verdicts={"pathwise_contraction": identity_ok and bound_ok},
        worst={"pathwise_contraction": (float(g[i, 0]), float(g[i, 1]))},
        margins={"pathwise_contraction": rho_hat - rho},
    )


def check_expected_contraction(model: ModelSpec, grid, rho: float | None = None) -> CouplingReport:
    """Exact one-step ``E#|X1 - X1'| <= rho |x - x'|`` over the grid.

    This is the route that works when only the mean slope contracts, e.g.
    ``a + c > 1`` with a regime that fires rarely at the states of interest.
    """
    g = _as_pairs(grid)
    vals = np.array([expected_contraction(model, a, b) for a, b in g])
    i = int(np.argmax(vals))
    worst = float(vals[i])
    limit = 1.0 if rho is None else float(rho)
    return CouplingReport(expected_rho=worst, verdicts={"expected_contraction": worst < limit},
                          worst={"expected_contraction": (float(g[i, 0]), float(g[i, 1]))},
                          margins={"expected_contraction": worst - limit})


def _qsharp_w(params: LogLinearParams, x: float, xp: float, depth: int) -> float:
    ys, w = poisson_weights(math.exp(min(x, xp)), depth)
    ln1y = np.log1p(ys)
    hi = params.d + params.a * max(x, xp) + params.b * ln1y
    hi2 = params.d + params.a * min(x, xp) + params.b * ln1y
    return float(np.sum(w * np.exp(np.abs(np.maximum(hi, hi2)))))


def qsharp_w(params: LogLinearParams, x, xp, depth: int = 1) -> float:
    """``Q#W(x, x') = E exp|X1 v X1'|`` by truncated Poisson summation."""
    x, xp = _check_log_state(x), _check_log_state(xp)
    return _qsharp_w(params, x, xp, depth)


def qsharp_w_bound(params: LogLinearParams, x, xp) -> float:
    """``2 exp|d| (1 + 4 exp(gamma (|x| v |x'|)))``."""
    return 2.0 * math.exp(abs(params.d)) * (1.0 + 4.0 * math.exp(params.gamma * max(abs(x), abs(xp))))


def check_qsharp_w_drift(params: LogLinearParams, grid) -> CouplingReport:
    """Exact ``Q#W`` against its closed-form bound, plus ``beta_hat = max(Q#W - W)``.

    The truncation error is certified by recomputing each sum with twice the
    tail allowance; the reported ``truncation_error`` is the largest relative
    disagreement.
    """
    g = _as_pairs(grid)
    lhs = np.empty(g.shape[0])
    rhs = np.empty(g.shape[0])
    trunc = 0.0
    for i, (x, xp) in enumerate(g):
        x, xp = _check_log_state(x), _check_log_state(xp)
        v1 = _qsharp_w(params, x, xp, 1)
        v2 = _qsharp_w(params, x, xp, 2)
        trunc = max(trunc, abs(v2 - v1) / max(1.0, abs(v2)))
        lhs[i] = v2
        rhs[i] = qsharp_w_bound(params, x, xp)
    w = np.exp(np.abs(np.maximum(g[:, 0], g[:, 1])))
    margin = lhs - rhs
    i = int(np.argmax(margin))
    beta = float(np.max(lhs - w))
    return CouplingReport(
        qsharp_w_margin=float(margin[i]), beta_hat=max(beta, 0.0), truncation_error=trunc,
        verdicts={"qsharp_w_bound": bool(margin[i] <= 0.0), "truncation_certified": trunc < CERTIFY_TOL},
        worst={"qsharp_w_bound": (float(g[i, 0]), float(g[i, 1]))},
        margins={"qsharp_w_bound": float(margin[i])},
    )


# ---------------------------------------------------------------------------
# Monte Carlo identities


def check_coupling_identity(model: ModelSpec, x, x_prime, n: int, phi, replicates: int,
                            rng: RngStream) -> IdentityEstimate:
    """Both sides of ``E[phi(X_n#) 1{T > n}] = E#[phi(X_n#) prod_{i<n} alpha(X_i#)]``.

    The left side runs the thinning coupling and keeps paths whose coins all
    came up heads; the right side runs ``Q#`` with the analytic weight.
    ``phi`` maps arrays ``(x_n, x'_n)`` to an array of bounded values.
    """
    _require_poisson(model)
    if n < 1:
        raise ValueError("n must be at least 1")
    code, p = model.code, model.kernel()
    xn, xpn, alive = _coupled_batch(code, p, float(x), float(x_prime), int(n), int(replicates),
                                    rng.child(0).generator)
    lhs = np.asarray(phi(xn, xpn), dtype=float) * alive
    qn, qpn, weight = _qsharp_batch(code, p, float(x), float(x_prime), int(n), int(replicates),
                                    rng.child(1).generator)
    rhs = np.asarray(phi(qn, qpn), dtype=float) * weight
    r = float(replicates)
    return IdentityEstimate(float(lhs.mean()), float(lhs.std(ddof=1) / math.sqrt(r)),
                            float(rhs.mean()), float(rhs.std(ddof=1) / math.sqrt(r)))


def drift_function(model: ModelSpec, x) -> np.ndarray:
    """``V``: identity for threshold, ``exp|x|`` for log-linear."""
    x = np.asarray(x, dtype=float)
    if model.family is Family.THRESHOLD:
        return x
    if model.family is Family.LOGLINEAR:
        return np.exp(np.abs(x))
    raise DomainError("no drift function is defined for GARCH here")


def batch_means(values, batches: int | None = None) -> tuple[float, float]:
    """Mean and batch-means standard error of a correlated sequence."""
    v = np.asarray(values, dtype=float)
    b = batches or max(int(math.isqrt(v.size)), 2)
    size = v.size // b
    if size < 1:
        raise ValueError("too few values for batch means")
    means = v[: b * size].reshape(b, size).mean(axis=1)
    return float(v.mean()), float(means.std(ddof=1) / math.sqrt(b))


def check_stationary_moment(model: ModelSpec, lam: float, beta: float, horizon: int,
                            rng: RngStream, burn_in: int = 1000) -> MomentCheck:
    """Time average of ``V(X_k)`` after burn-in against ``beta / (1 - lam)``."""
    if not 0 < lam < 1 or beta < 0:
        raise ValueError("need lam in (0, 1) and beta >= 0")
    traj = simulate(model, n=int(horizon), rng=rng, burn_in=burn_in)
    mean, se = batch_means(drift_function(model, traj.x[1:]))
    return MomentCheck(mean, se, beta / (1.0 - lam), int(horizon))


def discounted_peak(v, eta: float) -> tuple[int, float, float]:
    """``argmax_k eta^k v_k``, the maximum, and the last discounted value.

    For a stationary sequence with ``E (ln v_0)+ < inf`` the discounted
    sequence tends to zero, so its maximum sits at a small index.
    """
    v = np.asarray(v, dtype=float)
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    logs = np.log(v) + np.arange(v.size) * math.log(eta)
    k = int(np.argmax(logs))
    return k, float(math.exp(logs[k])), float(math.exp(logs[-1]))


# ---------------------------------------------------------------------------
# assembled verification


@dataclass
class VerificationReport:
    model: ModelSpec
    drift: DriftReport
    coupling: CouplingReport
    moment: MomentCheck | None
    route: str

    @property
    def conditions(self) -> dict:
        out = {"drift": self.drift.verdict}
        out.update(self.coupling.verdicts)
        if self.moment is not None:
            out["stationary_moment"] = self.moment.verdict
        return out

    @property
    def verdict(self) -> bool:
        return all(self.conditions.values())

    def to_text(self) -> str:
        buf = io.StringIO()
        p = self.model.params
        buf.write("[model]\n")
        buf.write(f"family = {self.model.family.value}\n")
        for name, val in zip(p.names, p.vector()):
            buf.write(f"{name} = {float(val)!r}\n")
        if self.model.family is Family.THRESHOLD:
            buf.write(f"L = {float(p.L)!r}\nU = {float(p.U)!r}\n")
        buf.write(f"\n[summary]\nverdict = {_pf(self.verdict)}\ncoupling_route = {self.route}\n")
        d = self.drift
        buf.write(f"\n[condition.drift]\nverdict = {_pf(d.verdict)}\nlambda_hat = {d.lambda_hat!r}\n"
                  f"beta_hat = {d.beta_hat!r}\nworst_state = {d.worst_state!r}\nmargin = {d.margin!r}\n")
        c = self.coupling
        for name, ok in c.verdicts.items():
            buf.write(f"\n[condition.{name}]\nverdict = {_pf(ok)}\n")
            if name in c.worst:
                buf.write(f"worst_pair = {c.worst[name][0]!r}, {c.worst[name][1]!r}\n")
            if name in c.margins:
                buf.write(f"margin = {c.margins[name]!r}\n")
        buf.write("\n[coupling]\n")
        for key in ("rho_hat", "expected_rho", "alpha_deficit_max", "qsharp_w_margin", "beta_hat",
                    "truncation_error"):
            val = getattr(c, key)
            if val is not None:
                buf.write(f"{key} = {float(val)!r}\n")
        if self.moment is not None:
            m = self.moment
            buf.write(f"\n[condition.stationary_moment]\nverdict = {_pf(m.verdict)}\n"
                      f"empirical = {m.empirical!r}\nstandard_error = {m.se!r}\nbound = {m.bound!r}\n"
                      f"horizon = {m.horizon}\nmargin = {m.empirical - m.bound!r}\n")
        buf.write("\n[table.drift]\ncolumns = x, QV, ratio\n")
        for x, qv, r in zip(d.grid, d.qv, d.ratio):
            buf.write(f"{float(x)!r}, {float(qv)!r}, {float(r)!r}\n")
        return buf.getvalue()


def _pf(ok: bool) -> str:
    return "pass" if ok else "fail"


def default_state_grid(model: ModelSpec) -> np.ndarray:
    if model.family is Family.THRESHOLD:
        return model.params.omega + np.linspace(0.0, 20.0, 21)
    return np.arange(-16, 17) * 0.25


def verify_model(model: ModelSpec, rng: RngStream, states=None, replicates: int = 200,
                 moment_horizon: int = 100_000) -> VerificationReport:
    """Run every certificate for one parameter value.

    The coupling route is the pathwise one when the Lipschitz slope bound
    contracts; otherwise, for the threshold family with its bounded ``W``,
    the expected one-step contraction is checked instead. Pass
    ``moment_horizon=0`` to skip the simulation-based moment check.
    """
    _require_poisson(model)
    states = default_state_grid(model) if states is None else np.asarray(states, dtype=float)
    pairs = pair_grid(states)
    drift = drift_report(model)
    coupling = check_alpha_bound(model, pairs)
    if model.params.contraction < 1:
        route = "pathwise"
        coupling = coupling.merge(check_qsharp_contraction(model, pairs, replicates, rng.child(0)))
    elif model.family is Family.THRESHOLD:
        route = "expected"
        coupling = coupling.merge(check_expected_contraction(model, pairs))
    else:
        route = "none"
        coupling = coupling.merge(CouplingReport(rho_hat=model.params.contraction,
                                                 verdicts={"pathwise_contraction": False}))
    if model.family is Family.LOGLINEAR:
        coupling = coupling.merge(check_qsharp_w_drift(model.params, pairs))
    moment = None
    if moment_horizon and drift.verdict:
        moment = check_stationary_moment(model, drift.lambda_hat, drift.beta_hat, moment_horizon,
                                         rng.child(1))
    return VerificationReport(model, drift, coupling, moment, route)
