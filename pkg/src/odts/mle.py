"""Conditional maximum-likelihood fitting and Monte Carlo recovery experiments.

:func:`fit` maximises the conditional log-likelihood with a projected simplex
search from several Latin-hypercube starts. The experiment drivers simulate
fresh series per ``(n, replicate)`` from streams keyed by both, fit them, and
summarise how the estimates concentrate as ``n`` grows.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .likelihood import _conditional_sum, conditional_loglik, log_factorials, stationary_states
from .model import Family, ModelSpec, ParameterSpace, as_observations
from .optimize import projected_nelder_mead
from .sampling import RngStream
from .simulate import DEFAULT_BURN_IN, simulate

DEFAULT_STARTS = 10
START_BLOCK = 10  # starts are drawn in Latin-hypercube blocks of this size


@dataclass
class FitResult:
    theta_hat: np.ndarray
    loglik: float
    n: int
    starts: int
    converged: bool
    iterations: int
    active_constraints: list
    flags: list = field(default_factory=list)
    x0: float = 0.0
    start_values: np.ndarray = field(default=None, repr=False)  # best loglik reached per start
    start_points: np.ndarray = field(default=None, repr=False)
    winner: int = 0


def start_points(space: ParameterSpace, starts: int, rng: RngStream) -> np.ndarray:
    """First ``starts`` points of the start sequence for ``rng``.

    Block ``j`` of the sequence is a Latin hypercube of ``START_BLOCK``
    points from ``rng.child(j)``, so asking for more starts only appends.
    """
    if starts < 1:
        raise ValueError("need at least one start")
    blocks = [space.latin_hypercube(START_BLOCK, rng.child(j)) for j in range(-(-starts // START_BLOCK))]
    return np.vstack(blocks)[:starts]


def _degeneracy_flags(y) -> list:
    flags = []
    if y.size and np.all(y == y[0]):
        flags.append("constant_series")
        if y[0] == 0:
            flags.append("all_zero_series")
    return flags


def fit(space: ParameterSpace, y, x0=None, starts: int = DEFAULT_STARTS, rng: RngStream | None = None,
        initial=None) -> FitResult:
    """Conditional MLE over ``space`` given ``X_0 = x0``.

    ``initial`` overrides the Latin-hypercube starts with explicit points
    (projected into the space). The winner is the start with the highest
    terminal log-likelihood, the lowest index on ties.
    """
    model0 = space.model(space.anchor)
    y = as_observations(model0, y)
    if y.size == 0:
        raise DomainError("need at least one observation")
    x0 = space.default_x0() if x0 is None else space.clip_state(float(x0))
    if initial is None:
        pts = start_points(space, starts, rng or RngStream(0))
    else:
        pts = np.array([space.project(p) for p in np.atleast_2d(np.asarray(initial, dtype=float))])
    code = model0.code
    p = model0.kernel()
    dim = space.dim
    logfact = log_factorials(y)
    n = y.size

    def objective(theta):
        p[:dim] = theta
        s = _conditional_sum(code, p, x0, y, logfact)
        return -s / n if np.isfinite(s) else math.inf

    scale = np.where(space.upper > space.lower, space.upper - space.lower, 1.0)
    results = [projected_nelder_mead(objective, s, space.project, scale) for s in pts]
    values = np.array([-r.fun for r in results])
    best = 0
    for i in range(1, len(results)):
        if values[i] > values[best]:
            best = i
    win = results[best]
    theta = space.project(win.x)
    loglik = conditional_loglik(space.model(theta), x0, y).value
    return FitResult(
        theta_hat=theta, loglik=loglik, n=int(n), starts=len(pts), converged=bool(win.converged),
        iterations=int(sum(r.iterations for r in results)), active_constraints=space.active_constraints(theta),
        flags=_degeneracy_flags(y), x0=float(x0), start_values=values, start_points=pts, winner=best,
    )


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ConsistencyReport:
    """Estimates per ``(n, replicate)``; ``theta_star`` is ``None`` under misspecification."""

    family: Family
    names: tuple
    n_grid: tuple
    replicates: int
    seed: int
    stream_ids: np.ndarray  # (len(n_grid), replicates)
    estimates: np.ndarray  # (len(n_grid), replicates, dim)
    logliks: np.ndarray
    converged: np.ndarray
    theta_star: np.ndarray | None = None
    generator: ModelSpec | None = None
    kind: str = "consistency"

    def median_abs_error(self) -> np.ndarray:
        if self.theta_star is None:
            raise ValueError("no truth recorded for a misspecified experiment")
        return np.median(np.abs(self.estimates - self.theta_star), axis=1)

    def iqr(self) -> np.ndarray:
        q75, q25 = np.percentile(self.estimates, [75, 25], axis=1)
        return q75 - q25

    def pseudo_true(self) -> np.ndarray:
        """Coordinatewise median of the largest-``n`` estimates."""
        return np.median(self.estimates[-1], axis=0)

    def verdicts(self) -> dict:
        if self.theta_star is not None:
            err = self.median_abs_error()
            return {name: bool(np.all(np.diff(err[:, j]) < 0)) for j, name in enumerate(self.names)}
        spread = self.iqr()
        return {name: bool(np.all(np.diff(spread[:, j]) < 0)) for j, name in enumerate(self.names)}

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        buf.write("family,n,replicate,seed,coord,estimate,truth\n")
        for i, n in enumerate(self.n_grid):
            for r in range(self.replicates):
                for j, name in enumerate(self.names):
                    truth = "" if self.theta_star is None else repr(float(self.theta_star[j]))
                    buf.write(f"{self.family.value},{n},{r},{int(self.stream_ids[i, r])},{name},"
                              f"{float(self.estimates[i, r, j])!r},{truth}\n")
        text = buf.getvalue()
        _write(path_or_buf, text)
        return text

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "family": self.family.value,
            "coords": list(self.names),
            "n_grid": [int(n) for n in self.n_grid],
            "replicates": int(self.replicates),
            "seed": int(self.seed),
            "converged_fraction": [float(c.mean()) for c in self.converged],
            "iqr": _nested(self.iqr()),
            "verdicts": self.verdicts(),
        }
        if self.theta_star is not None:
            out["theta_star"] = [float(t) for t in self.theta_star]
            out["median_abs_error"] = _nested(self.median_abs_error())
        else:
            out["pseudo_true"] = [float(t) for t in self.pseudo_true()]
            gen = self.generator
            out["generator"] = {"family": gen.family.value,
                                **{k: float(v) for k, v in zip(gen.params.names, gen.params.vector())}}
        return out

    def summary_json(self, path_or_buf=None) -> str:
        text = json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"
        _write(path_or_buf, text)
        return text


def _nested(a) -> list:
    return [[float(v) for v in row] for row in a]


def _write(path_or_buf, text):
    if path_or_buf is None:
        return
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)


def _replicate(job):
    generator, space, n, stream, starts, burn_in, x0 = job
    traj = simulate(generator, n=n, rng=stream, burn_in=burn_in)
    res = fit(space, traj.y, x0=x0, starts=starts, rng=stream.child(1))
    return res.theta_hat, res.loglik, res.converged


def _run_grid(generator, space, n_grid, replicates, rng, starts, burn_in, x0, workers):
    n_grid = tuple(int(n) for n in n_grid)
    if not n_grid or min(n_grid) < 1 or replicates < 1:
        raise ConfigurationError("need a nonempty grid of positive sample sizes and replicates >= 1")
    streams = [[rng.child(n, r) for r in range(replicates)] for n in n_grid]
    jobs = [(generator, space, n, streams[i][r], starts, burn_in, x0)
            for i, n in enumerate(n_grid) for r in range(replicates)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_replicate, jobs))
    else:
        out = [_replicate(j) for j in jobs]
    k = len(n_grid)
    est = np.array([o[0] for o in out]).reshape(k, replicates, space.dim)
    ll = np.array([o[1] for o in out]).reshape(k, replicates)
    conv = np.array([o[2] for o in out]).reshape(k, replicates)
    ids = np.array([[s.stream_id for s in row] for row in streams], dtype=np.uint64)
    return n_grid, ids, est, ll, conv


def threshold_regime_nonempty(L: float, U: float) -> bool:
    """Whether ``(L, U)`` contains a nonnegative integer."""
    k = max(0, math.floor(L) + 1)
    return k < U


def consistency_experiment(space: ParameterSpace, theta_star, n_grid, replicates: int, rng: RngStream,
                           starts: int = DEFAULT_STARTS, burn_in: int = DEFAULT_BURN_IN, x0=None,
                           workers: int = 1) -> ConsistencyReport:
    """Simulate from ``theta_star`` and refit, for every ``n`` and replicate.

    ``space`` must be a well-specified parameter set containing
    ``theta_star``; for the threshold family the regime ``(L, U)`` must
    contain an integer, otherwise the regime never switches on data.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    if space.kind != "wellspecified":
        raise ConfigurationError("consistency experiments need a well-specified parameter space")
    if theta_star.shape != (space.dim,) or not space.contains(theta_star):
        raise ConfigurationError(f"theta_star {theta_star.tolist()} is not in {space!r}")
    if space.family is Family.THRESHOLD and not threshold_regime_nonempty(*space.thresholds):
        raise ConfigurationError(f"(L, U) = {space.thresholds} contains no integer; the regimes are not identifiable")
    generator = space.model(theta_star, strict=True)
    n_grid, ids, est, ll, conv = _run_grid(generator, space, n_grid, replicates, rng, starts, burn_in, x0, workers)
    return ConsistencyReport(space.family, space.names, n_grid, int(replicates), rng.seed, ids, est, ll, conv,
                             theta_star=theta_star, generator=generator, kind="consistency")


def misspecification_experiment(generator: ModelSpec, space: ParameterSpace, n_grid, replicates: int,
                                rng: RngStream, starts: int = DEFAULT_STARTS, burn_in: int = DEFAULT_BURN_IN,
                                x0=None, workers: int = 1, check_generator: bool = True) -> ConsistencyReport:
    """Fit ``space.family`` to data from a possibly different ``generator``.

    The generator must pass its own stability certificates. The report
    tracks the replicate scatter across ``n``; the large-``n`` median stands
    in for the pseudo-true parameter.
    """
    if not generator.family.is_count:
        raise ConfigurationError("the fitted families are Poisson; the generator must produce counts")
    if check_generator:
        from .ergodicity import verify_model

        rep = verify_model(generator, rng.child(2**32), moment_horizon=0)
        if not rep.verdict:
            failed = [k for k, v in rep.conditions.items() if not v]
            raise ConfigurationError(f"generator fails its stability certificates: {failed}")
    n_grid, ids, est, ll, conv = _run_grid(generator, space, n_grid, replicates, rng, starts, burn_in, x0, workers)
    return ConsistencyReport(space.family, space.names, n_grid, int(replicates), rng.seed, ids, est, ll, conv,
                             theta_star=None, generator=generator, kind="misspecification")


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class LipschitzReport:
    max_ratio: float
    bound: float
    max_excess: float  # largest ratio - bound beyond the rounding allowance
    mean_log_rho: float
    samples: int

    @property
    def verdict(self) -> bool:
        return self.max_excess <= 0 and self.mean_log_rho < 0


def lipschitz_condition_check(space: ParameterSpace, theta, y, x, x_prime, tol: float = 1e-12) -> LipschitzReport:
    """Pathwise ``|f_y(x) - f_y(x')| <= rho |x - x'|`` with the constant ``rho`` of the space.

    Arrays are aligned samples; ``theta`` has one row per sample. Pairs with
    ``x = x'`` are trivially fine and skipped. ``mean_log_rho`` is the sample
    mean of ``ln rho(Y)``, which equals ``ln rho`` since ``rho`` is constant.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    y, x, xp = (np.asarray(v, dtype=float).reshape(-1) for v in (y, x, x_prime))
    if not (theta.shape[0] == y.size == x.size == xp.size):
        raise ValueError("samples must have matching lengths")
    rho = float(space.stability_margin)
    if space.family is Family.THRESHOLD:
        L, U = space.thresholds
        om, a, b, c, d = theta.T
        out = (y <= L) | (y >= U)
        f = lambda s: om + a * s + b * y + (c * s + d * y) * out  # noqa: E731
    else:
        dd, a, b = theta.T
        f = lambda s: dd + a * s + b * np.log1p(y)  # noqa: E731
    gap = np.abs(x - xp)
    moving = gap > 0
    ratio = np.abs(f(x) - f(xp))[moving] / gap[moving]
    scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(xp)))[moving] / gap[moving]
    excess = ratio - rho - tol * scale
    max_ratio = float(ratio.max()) if ratio.size else 0.0
    max_excess = float(excess.max()) if ratio.size else -math.inf
    log_rho = np.full(y.size, math.log(rho))
    return LipschitzReport(max_ratio, rho, max_excess, float(log_rho.mean()), int(y.size))


@dataclass(frozen=True)
class IdentifiabilityReport:
    min_separation: float  # min over grid of max_k |state difference|
    worst_theta: np.ndarray
    grid_size: int

    @property
    def verdict(self) -> bool:
        return self.min_separation > 0


def identifiability_check(space: ParameterSpace, theta_star, grid, y, history, m: int | None = None,
                          atol: float = 0.0) -> IdentifiabilityReport:
    """Compare infinite-past state paths under ``theta_star`` and each grid point.

    Grid points within ``atol`` (max-norm) of ``theta_star`` are skipped.
    """
    theta_star = np.asarray(theta_star, dtype=float)
    m = space.default_truncation() if m is None else int(m)
    ref = stationary_states(space.model(theta_star), y, history, m)
    best, worst = math.inf, None
    count = 0
    for theta in np.atleast_2d(np.asarray(grid, dtype=float)):
        if np.max(np.abs(theta - theta_star)) <= atol:
            continue
        count += 1
        sep = float(np.max(np.abs(stationary_states(space.model(theta), y, history, m) - ref)))
        if sep < best:
            best, worst = sep, theta.copy()
    if count == 0:
        raise ValueError("grid has no point distinct from theta_star")
    return IdentifiabilityReport(best, worst, count)
