"""Model families, link functions and the compact parameter spaces.

Three observation-driven families are supported:

* Poisson threshold:  ``Y ~ Poisson(x)``,
  ``f_y(x) = omega + a x + b y + (c x + d y) 1{y not in (L, U)}``
* log-linear Poisson: ``Y ~ Poisson(exp(x))``, ``f_y(x) = d + a x + b log(1 + y)``
* GARCH(1,1):         ``Y ~ N(0, x)``,         ``f_y(x) = d + a x + b y**2``

Numerical work happens in small numba kernels operating on a family code and a
flat ``float64`` parameter array (see :meth:`ModelSpec.kernel`), so the same
recursion is shared by simulation, likelihood evaluation and fitting.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError

THRESHOLD, LOGLINEAR, GARCH = 0, 1, 2

#: Largest Poisson rate accepted anywhere in the package.
MAX_RATE = 1e12

#: Default accuracy target for truncated infinite-past states.
TRUNCATION_TOL = 1e-10


class Family(str, enum.Enum):
    THRESHOLD = "threshold"
    LOGLINEAR = "loglinear"
    GARCH = "garch"

    @property
    def code(self) -> int:
        return _FAMILY_CODES[self]

    @property
    def is_count(self) -> bool:
        return self is not Family.GARCH


_FAMILY_CODES = {Family.THRESHOLD: THRESHOLD, Family.LOGLINEAR: LOGLINEAR, Family.GARCH: GARCH}


# ---------------------------------------------------------------------------
# parameter containers


@dataclass(frozen=True)
class ThresholdParams:
    """Poisson threshold parameters ``(omega, a, b, c, d)`` and regime bounds ``(L, U)``.

    ``U`` may be ``math.inf``, in which case the indicator reads ``1{y <= L}``.
    With ``strict=False`` the positivity requirement is relaxed to
    ``omega > 0`` and ``a, b, a + c, b + d >= 0``.
    """

    omega: float
    a: float
    b: float
    c: float
    d: float
    L: float
    U: float
    strict: bool = field(default=True, compare=False)

    names = ("omega", "a", "b", "c", "d")

    def __post_init__(self):
        vals = self.vector()
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError(f"threshold parameters must be finite, got {vals}")
        if not self.L < self.U or math.isnan(self.L):
            raise ConfigurationError(f"threshold bounds need L < U, got L={self.L}, U={self.U}")
        mins = (self.omega, self.a, self.b, self.a + self.c, self.b + self.d)
        if self.strict:
            if min(mins) <= 0:
                raise ConfigurationError(
                    "threshold parameters need min(omega, a, b, a+c, b+d) > 0, "
                    f"got {dict(zip(self.names, vals))}"
                )
        elif self.omega <= 0 or min(mins[1:]) < 0:
            raise ConfigurationError("relaxed threshold parameters need omega > 0 and a, b, a+c, b+d >= 0")

    def vector(self) -> np.ndarray:
        return np.array([self.omega, self.a, self.b, self.c, self.d], dtype=float)

    @property
    def contraction(self) -> float:
        """Pathwise Lipschitz constant ``a v (a + c)`` of the link in ``x``."""
        return max(self.a, self.a + self.c)

    def slope(self, y) -> float:
        return self.a + self.c * float(outside_regime(y, self.L, self.U))


@dataclass(frozen=True)
class LogLinearParams:
    d: float
    a: float
    b: float

    names = ("d", "a", "b")

    def __post_init__(self):
        if not np.all(np.isfinite(self.vector())):
            raise ConfigurationError("log-linear parameters must be finite")

    def vector(self) -> np.ndarray:
        return np.array([self.d, self.a, self.b], dtype=float)

    @property
    def gamma(self) -> float:
        """``|a| v |b| v |a + b|``; below one means the chain is stable."""
        return max(abs(self.a), abs(self.b), abs(self.a + self.b))

    @property
    def contraction(self) -> float:
        return abs(self.a)


@dataclass(frozen=True)
class GarchParams:
    d: float
    a: float
    b: float

    names = ("d", "a", "b")

    def __post_init__(self):
        if not np.all(np.isfinite(self.vector())) or min(self.d, self.a, self.b) <= 0:
            raise ConfigurationError("GARCH parameters need min(d, a, b) > 0")

    def vector(self) -> np.ndarray:
        return np.array([self.d, self.a, self.b], dtype=float)

    @property
    def contraction(self) -> float:
        return self.a


_PARAM_TYPES = {Family.THRESHOLD: ThresholdParams, Family.LOGLINEAR: LogLinearParams, Family.GARCH: GarchParams}


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    params: ThresholdParams | LogLinearParams | GarchParams

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if not isinstance(self.params, _PARAM_TYPES[fam]):
            raise ConfigurationError(f"{fam.value} model needs {_PARAM_TYPES[fam].__name__}")

    @classmethod
    def threshold(cls, omega, a, b, c, d, L, U, strict=True):
        return cls(Family.THRESHOLD, ThresholdParams(omega, a, b, c, d, L, U, strict=strict))

    @classmethod
    def loglinear(cls, d, a, b):
        return cls(Family.LOGLINEAR, LogLinearParams(d, a, b))

    @classmethod
    def garch(cls, d, a, b):
        return cls(Family.GARCH, GarchParams(d, a, b))

    @property
    def code(self) -> int:
        return self.family.code

    def kernel(self) -> np.ndarray:
        """Flat parameter array consumed by the numba kernels."""
        p = np.zeros(7)
        v = self.params.vector()
        p[: v.size] = v
        if self.family is Family.THRESHOLD:
            p[5], p[6] = self.params.L, self.params.U
        return p

    def fixed_point(self) -> float:
        """Noise-free fixed point used as the default initial state."""
        p = self.params
        if self.family is Family.THRESHOLD:
            s = p.a + p.c
            return p.omega / (1.0 - s) if s < 1 else p.omega
        if self.family is Family.LOGLINEAR:
            return p.d / (1.0 - p.a) if abs(p.a) < 1 else p.d
        s = p.a + p.b
        return p.d / (1.0 - s) if s < 1 else p.d


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True)
def _link(code, p, x, y):
    if code == THRESHOLD:
        if y <= p[5] or y >= p[6]:
            return p[0] + (p[1] + p[3]) * x + (p[2] + p[4]) * y
        return p[0] + p[1] * x + p[2] * y
    if code == LOGLINEAR:
        return p[0] + p[1] * x + p[2] * math.log1p(y)
    return p[0] + p[1] * x + p[2] * y * y


@numba.njit(cache=True)
def _log_density(code, x, y):
    # nan flags a state outside the family domain
    if code == THRESHOLD:
        if x <= 0.0:
            return np.nan
        return -x + y * math.log(x) - math.lgamma(y + 1.0)
    if code == LOGLINEAR:
        return -math.exp(x) + x * y - math.lgamma(y + 1.0)
    if x <= 0.0:
        return np.nan
    return -0.5 * (math.log(2.0 * math.pi * x) + y * y / x)


@numba.njit(cache=True)
def _run_states(code, p, x0, y):
    n = y.shape[0]
    xs = np.empty(n + 1)
    xs[0] = x0
    x = x0
    for k in range(n):
        x = _link(code, p, x, y[k])
        xs[k + 1] = x
    return xs


@numba.njit(cache=True)
def _truncated_state(code, p, y, idx, m):
    """Infinite-past state built from ``y[idx], y[idx-1], ..., y[idx-m]``."""
    if code == THRESHOLD:
        x = 0.0
    else:
        x = p[0] / (1.0 - p[1])
    for j in range(idx - m, idx + 1):
        x = _link(code, p, x, y[j])
    return x


def outside_regime(y, L, U) -> bool:
    return bool(y <= L or y >= U)


# ---------------------------------------------------------------------------
# public operations


def _check_observation(model: ModelSpec, y) -> float:
    if model.family.is_count:
        if isinstance(y, (bool, np.bool_)):
            raise DomainError("boolean is not a count observation")
        try:
            yf = float(y)
        except (TypeError, ValueError):
            raise DomainError(f"observation {y!r} is not a count") from None
        if not (yf >= 0 and yf == math.floor(yf) and math.isfinite(yf)):
            raise DomainError(f"{model.family.value} observations are nonnegative integers, got {y!r}")
        return yf
    yf = float(y)
    if not math.isfinite(yf):
        raise DomainError(f"GARCH observation must be finite, got {y!r}")
    return yf


def _check_state(model: ModelSpec, x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"state must be finite, got {x}")
    if model.family is not Family.LOGLINEAR and x < 0:
        raise DomainError(f"{model.family.value} states are nonnegative, got {x}")
    return x


def link(model: ModelSpec, x, y) -> float:
    """One step of the state update, ``f_y(x)``."""
    return float(_link(model.code, model.kernel(), _check_state(model, x), _check_observation(model, y)))


def log_observation_density(model: ModelSpec, x, y) -> float:
    """``log h(x; y)``: Poisson(x), Poisson(exp(x)) or N(0, x) log-density."""
    yf = _check_observation(model, y)
    x = float(x)
    if model.family is not Family.LOGLINEAR and not x > 0:
        raise DomainError(f"{model.family.value} density needs x > 0, got {x}")
    return float(_log_density(model.code, x, yf))


def as_observations(model: ModelSpec, y_seq) -> np.ndarray:
    y = np.asarray(y_seq, dtype=float).reshape(-1)
    if y.size and model.family.is_count:
        if not (np.all(y >= 0) and np.all(np.floor(y) == y) and np.all(np.isfinite(y))):
            raise DomainError(f"{model.family.value} observations must be nonnegative integers")
    elif y.size and not np.all(np.isfinite(y)):
        raise DomainError("observations must be finite")
    return y


def iterate_link(model: ModelSpec, x0, y_seq) -> float:
    """Composition ``f_{y_t} o ... o f_{y_1}(x0)``; the empty sequence returns ``x0``."""
    x0 = _check_state(model, x0)
    y = as_observations(model, y_seq)
    if y.size == 0:
        return x0
    return float(_run_states(model.code, model.kernel(), x0, y)[-1])


def state_path(model: ModelSpec, x0, y_seq) -> np.ndarray:
    """All states ``x0, f_{y_1}(x0), ...`` along an observation sequence."""
    return _run_states(model.code, model.kernel(), _check_state(model, x0), as_observations(model, y_seq))


def truncation_depth(rho: float, tol: float = TRUNCATION_TOL) -> int:
    """Terms needed so that ``rho**m <= tol``."""
    if not 0 <= rho < 1:
        raise ConfigurationError(f"contraction factor must lie in [0, 1), got {rho}")
    if rho == 0:
        return 0
    return int(math.ceil(math.log(tol) / math.log(rho)))


def _require_stationary_family(model):
    if model.family is Family.GARCH:
        raise DomainError("stationary-state series is defined for the Poisson families only")


def stationary_state(model: ModelSpec, y_past, m: int | None = None) -> float:
    """Truncated infinite-past state from observations ordered most recent first.

    Uses ``y_past[0..m]`` (``m + 1`` terms). The intercept of the log-linear
    family enters through its exact geometric sum ``d / (1 - a)``.
    """
    _require_stationary_family(model)
    if m is None:
        m = truncation_depth(model.params.contraction)
    m = int(m)
    y = as_observations(model, y_past)
    if m < 0:
        raise ValueError("truncation depth must be nonnegative")
    if y.size < m + 1:
        raise ValueError(f"need at least {m + 1} past observations, got {y.size}")
    chron = np.ascontiguousarray(y[: m + 1][::-1])
    return float(_truncated_state(model.code, model.kernel(), chron, m, m))


def truncation_error_bound(model: ModelSpec, y_past, m: int, m_next: int) -> float:
    """Bound on ``|state(m) - state(m_next)|`` from the discarded terms.

    Each discarded term ``j`` is at most ``rho**j`` times the largest
    observation-driven increment among ``y_past[m+1..m_next]``, so the gap is
    at most ``rho**m * C`` with ``C = rho * max_term / (1 - rho)``.
    """
    _require_stationary_family(model)
    y = as_observations(model, y_past)[m + 1 : m_next + 1]
    rho = model.params.contraction
    if y.size == 0:
        return 0.0
    p = model.params
    if model.family is Family.THRESHOLD:
        out = (y <= p.L) | (y >= p.U)
        terms = np.abs(p.omega + p.b * y + p.d * y * out)
    else:
        terms = np.abs(p.b * np.log1p(y))
    c_seq = rho * terms.max() / (1.0 - rho)
    return float(rho**m * c_seq)


def poisson_weights(lam: float, depth: int = 1):
    """Support points and pmf of Poisson(``lam``) truncated at ``lam + 12 sqrt(lam) + 30``.

    ``depth`` multiplies the tail allowance (``depth=2`` doubles it), which is
    how the exact sums certify their truncation error.
    """
    lam = float(lam)
    if not (lam >= 0 and math.isfinite(lam)):
        raise DomainError(f"Poisson rate must be a nonnegative finite number, got {lam}")
    if lam > MAX_RATE:
        raise DomainError(f"Poisson rate {lam:g} exceeds the overflow guard {MAX_RATE:g}")
    y_max = int(math.ceil(lam + depth * (12.0 * math.sqrt(lam) + 30.0)))
    ys = np.arange(y_max + 1, dtype=float)
    if lam == 0:
        w = np.zeros_like(ys)
        w[0] = 1.0
        return ys, w
    return ys, np.exp(ys * math.log(lam) - lam - gammaln(ys + 1.0))


# ---------------------------------------------------------------------------
# parameter spaces


@dataclass(frozen=True)
class LinearConstraint:
    """``coeffs . theta <= bound``."""

    name: str
    coeffs: tuple
    bound: float


class ParameterSpace:
    """Box plus linear inequalities describing a compact parameter set.

    Use the named constructors; they encode the four admissible sets for the
    threshold and log-linear families (misspecified and well-specified
    variants). ``stability_margin`` is the Lipschitz constant every link in
    the set obeys in the state argument.
    """

    PROJECTION_MARGIN = 1e-9

    def __init__(self, family, lower, upper, constraints=(), stability_margin=None,
                 thresholds=None, kind="", alpha_low=None):
        self.family = Family(family)
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.constraints = tuple(constraints)
        self.stability_margin = stability_margin
        self.thresholds = thresholds
        self.kind = kind
        self.alpha_low = alpha_low
        self.names = _PARAM_TYPES[self.family].names
        if self.family is Family.GARCH:
            raise ConfigurationError("no parameter space is defined for GARCH fitting")
        if self.lower.shape != (len(self.names),) or self.upper.shape != self.lower.shape:
            raise ConfigurationError(f"bounds must have {len(self.names)} entries")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ConfigurationError("box bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ConfigurationError(f"lower bound exceeds upper bound: {self.lower} > {self.upper}")
        if self.family is Family.THRESHOLD:
            if thresholds is None:
                raise ConfigurationError("threshold space needs (L, U)")
            L, U = thresholds
            if not L < U:
                raise ConfigurationError("threshold bounds need L < U")
        self._G = np.array([c.coeffs for c in self.constraints], dtype=float).reshape(-1, self.dim)
        self._h = np.array([c.bound for c in self.constraints], dtype=float)
        self._components = self._constraint_components()
        self.anchor = self._chebyshev_center()

    # -- named constructors --------------------------------------------------

    @classmethod
    def threshold_misspecified(cls, L, U, alpha_low=0.01, alpha_bar=0.9, lower=None, upper=None):
        """Mins bounded below by ``alpha_low``, ``a v (a + c) <= alpha_bar``."""
        lower, upper = cls._threshold_box(alpha_low, alpha_bar, lower, upper)
        cons = cls._threshold_mins(alpha_low, alpha_bar) + [
            LinearConstraint("a+c<=alpha_bar", (0, 1, 0, 1, 0), alpha_bar),
        ]
        return cls(Family.THRESHOLD, lower, upper, cons, alpha_bar, (L, U), "misspecified", alpha_low)

    @classmethod
    def threshold_wellspecified(cls, L, U, alpha_low=0.01, alpha_bar=0.9, lower=None, upper=None):
        """Mins bounded below by ``alpha_low``, ``(a + b + c + d) v a <= alpha_bar``."""
        lower, upper = cls._threshold_box(alpha_low, alpha_bar, lower, upper)
        cons = cls._threshold_mins(alpha_low, alpha_bar) + [
            LinearConstraint("a+b+c+d<=alpha_bar", (0, 1, 1, 1, 1), alpha_bar),
        ]
        return cls(Family.THRESHOLD, lower, upper, cons, alpha_bar, (L, U), "wellspecified", alpha_low)

    @classmethod
    def loglinear_wellspecified(cls, d_max=2.0, alpha_tilde=0.9, lower=None, upper=None):
        """``|d| <= d_max`` and ``|a + b| v |a| v |b| <= alpha_tilde``."""
        if not 0 < alpha_tilde < 1:
            raise ConfigurationError("alpha_tilde must lie in (0, 1)")
        lo = np.array([-d_max, -alpha_tilde, -alpha_tilde]) if lower is None else np.asarray(lower, float)
        hi = np.array([d_max, alpha_tilde, alpha_tilde]) if upper is None else np.asarray(upper, float)
        cons = [
            LinearConstraint("a+b<=alpha", (0, 1, 1), alpha_tilde),
            LinearConstraint("-(a+b)<=alpha", (0, -1, -1), alpha_tilde),
            LinearConstraint("a<=alpha", (0, 1, 0), alpha_tilde),
            LinearConstraint("-a<=alpha", (0, -1, 0), alpha_tilde),
            LinearConstraint("b<=alpha", (0, 0, 1), alpha_tilde),
            LinearConstraint("-b<=alpha", (0, 0, -1), alpha_tilde),
        ]
        return cls(Family.LOGLINEAR, lo, hi, cons, alpha_tilde, None, "wellspecified")

    @classmethod
    def loglinear_misspecified(cls, d_max=2.0, a_max=0.9, b_max=1.0):
        """The box ``|d| <= d_max``, ``|a| <= a_max < 1``, ``|b| <= b_max``."""
        if not 0 < a_max < 1:
            raise ConfigurationError("a_max must lie in (0, 1)")
        return cls(Family.LOGLINEAR, [-d_max, -a_max, -b_max], [d_max, a_max, b_max], (), a_max,
                   None, "misspecified")

    @staticmethod
    def _threshold_box(alpha_low, alpha_bar, lower, upper):
        if not (alpha_low > 0 and 0 < alpha_bar < 1):
            raise ConfigurationError("need alpha_low > 0 and alpha_bar in (0, 1)")
        lo = np.array([alpha_low, alpha_low, alpha_low, -1.0, -1.0]) if lower is None else np.asarray(lower, float)
        hi = np.array([10.0, alpha_bar, 1.0, 1.0, 1.0]) if upper is None else np.asarray(upper, float)
        return lo, hi

    @staticmethod
    def _threshold_mins(alpha_low, alpha_bar):
        return [
            LinearConstraint("omega>=alpha_low", (-1, 0, 0, 0, 0), -alpha_low),
            LinearConstraint("a>=alpha_low", (0, -1, 0, 0, 0), -alpha_low),
            LinearConstraint("b>=alpha_low", (0, 0, -1, 0, 0), -alpha_low),
            LinearConstraint("a+c>=alpha_low", (0, -1, 0, -1, 0), -alpha_low),
            LinearConstraint("b+d>=alpha_low", (0, 0, -1, 0, -1), -alpha_low),
            LinearConstraint("a<=alpha_bar", (0, 1, 0, 0, 0), alpha_bar),
        ]

    def __repr__(self):
        return (f"ParameterSpace({self.family.value}, {self.kind}, lower={self.lower.tolist()}, "
                f"upper={self.upper.tolist()}, margin={self.stability_margin})")

    # -- geometry -------------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.names)

    def _chebyshev_center(self):
        width = self.upper - self.lower
        free = width > 0
        if not np.any(free):
            center = self.lower.copy()
            if self.max_violation(center) > 0:
                raise ConfigurationError("parameter space is empty")
            return center
        d = self.dim
        rows, rhs = [], []
        for i in range(d):
            if not free[i]:
                continue
            e = np.zeros(d + 1)
            e[i], e[d] = 1.0, 1.0
            rows.append(e.copy())
            rhs.append(self.upper[i])
            e[i] = -1.0
            rows.append(e)
            rhs.append(-self.lower[i])
        for g, h in zip(self._G, self._h):
            rows.append(np.append(g, np.linalg.norm(g[free])))
            rhs.append(h)
        A, b = np.array(rows), np.array(rhs)
        bounds = [(self.lower[i], self.upper[i]) if free[i] else (self.lower[i], self.lower[i]) for i in range(d)]
        c = np.zeros(d + 1)
        c[d] = -1.0
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds + [(0, None)], method="highs")
        if res.status != 0 or res.x[d] <= 10 * self.PROJECTION_MARGIN:
            raise ConfigurationError(f"parameter space is empty or has no interior: {self!r}")
        r_star = res.x[d]
        # second stage: keep half the inscribed radius, move as close as possible
        # to the box centre (scaled L1), so the anchor is not an arbitrary vertex
        mid = 0.5 * (self.lower + self.upper)
        scale = np.where(free, width, 1.0)
        nv = 2 * d + 1
        A2 = np.zeros((A.shape[0] + 2 * d, nv))
        A2[: A.shape[0], : d + 1] = A
        b2 = list(b)
        for i in range(d):
            row = A.shape[0] + 2 * i
            A2[row, i], A2[row, d + 1 + i] = 1.0, -1.0
            A2[row + 1, i], A2[row + 1, d + 1 + i] = -1.0, -1.0
            b2 += [mid[i], -mid[i]]
        c2 = np.zeros(nv)
        c2[d + 1 :] = 1.0 / scale
        res2 = linprog(c2, A_ub=A2, b_ub=np.array(b2),
                       bounds=bounds + [(0.5 * r_star, None)] + [(0, None)] * d, method="highs")
        return res2.x[:d] if res2.status == 0 else res.x[:d]

    def _constraint_components(self):
        """Groups of coordinates coupled through shared constraints, with their rows."""
        parent = list(range(self.dim))

        def find(i):
            while parent[i] != i:
                i = parent[i]
            return i

        for g in self._G:
            idx = np.flatnonzero(g)
            for j in idx[1:]:
                parent[find(j)] = find(idx[0])
        groups = {}
        for i in range(self.dim):
            groups.setdefault(find(i), []).append(i)
        comps = []
        for coords in groups.values():
            rows = np.array([r for r, g in enumerate(self._G) if np.any(g[coords] != 0)], dtype=int)
            if rows.size:
                comps.append((np.array(coords), rows))
        return comps

    def max_violation(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        v = max(float(np.max(self.lower - theta)), float(np.max(theta - self.upper)))
        if self._G.size:
            v = max(v, float(np.max(self._G @ theta - self._h)))
        return v

    def contains(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(np.isfinite(theta)) and self.max_violation(theta) <= tol)

    def project(self, theta) -> np.ndarray:
        """Map ``theta`` into the set: clip to the box, then shrink the
        constrained coordinates toward an interior anchor until every violated
        inequality holds with slack ``PROJECTION_MARGIN``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)):
            raise ValueError(f"theta must be a finite vector of length {self.dim}")
        if self.contains(theta):
            return theta.copy()
        out = np.clip(theta, self.lower, self.upper)
        if not self._G.size:
            return out
        gt = self._G @ out
        bad = gt > self._h
        if not np.any(bad):
            return out
        for coords, rows in self._components:
            hit = rows[bad[rows]]
            if hit.size == 0:
                continue
            anchor = out.copy()
            anchor[coords] = self.anchor[coords]
            ga = self._G[hit] @ anchor
            s = np.min((self._h[hit] - self.PROJECTION_MARGIN - ga) / (gt[hit] - ga))
            s = min(max(s, 0.0), 1.0)
            out[coords] = anchor[coords] + s * (out[coords] - anchor[coords])
        return out

    def active_constraints(self, theta, tol: float = 1e-7) -> list[str]:
        theta = np.asarray(theta, dtype=float)
        active = []
        for i, name in enumerate(self.names):
            if theta[i] - self.lower[i] <= tol:
                active.append(f"{name}>=lower")
            if self.upper[i] - theta[i] <= tol:
                active.append(f"{name}<=upper")
        for c, g, h in zip(self.constraints, self._G, self._h):
            if h - g @ theta <= tol:
                active.append(c.name)
        return active

    def center(self) -> np.ndarray:
        return self.anchor.copy()

    def model(self, theta, strict: bool = False) -> ModelSpec:
        theta = [float(t) for t in theta]
        if self.family is Family.THRESHOLD:
            return ModelSpec.threshold(*theta, *self.thresholds, strict=strict)
        return ModelSpec.loglinear(*theta)

    def latin_hypercube(self, n: int, rng) -> np.ndarray:
        """``n`` points from a Latin hypercube over the box, projected into the set."""
        from scipy.stats import qmc

        seed = rng.integers(0, 2**63 - 1) if hasattr(rng, "integers") else rng
        u = qmc.LatinHypercube(d=self.dim, seed=np.random.default_rng(seed)).random(n)
        pts = self.lower + u * (self.upper - self.lower)
        return np.array([self.project(p) for p in pts])

    def default_truncation(self, tol: float = TRUNCATION_TOL) -> int:
        return truncation_depth(self.stability_margin, tol)

    def default_x0(self) -> float:
        """Noise-free fixed point at the anchor, clipped into the fitting state space."""
        x0 = self.model(self.anchor).fixed_point()
        if self.family is Family.THRESHOLD:
            x0 = max(x0, self.alpha_low)
        return float(x0) + 0.0  # drop a signed zero

    def clip_state(self, x0: float) -> float:
        if self.family is Family.THRESHOLD and x0 < self.alpha_low:
            warnings.warn(f"initial state {x0} below alpha_low={self.alpha_low}; clipped", stacklevel=3)
            return float(self.alpha_low)
        return float(x0)


def params_from_vector(family, theta: Sequence[float], thresholds=None, strict=True) -> ModelSpec:
    family = Family(family)
    if family is Family.THRESHOLD:
        return ModelSpec.threshold(*theta, *thresholds, strict=strict)
    if family is Family.LOGLINEAR:
        return ModelSpec.loglinear(*theta)
    return ModelSpec.garch(*theta)
