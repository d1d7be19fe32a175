"""Conditional log-likelihood and its infinite-past approximation.

The conditional likelihood starts the filter at a fixed ``x0``; the stationary
version replaces every filtered state by the truncated infinite-past state
computed from the observations before it. Their uniform gap over the
parameter set vanishes as ``n`` grows, which is what :func:`loglik_gap` probes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .model import (
    THRESHOLD,
    Family,
    ModelSpec,
    ParameterSpace,
    _link,
    _run_states,
    _truncated_state,
    as_observations,
    truncation_depth,
)


@dataclass(frozen=True)
class LikelihoodValue:
    value: float  # average log-likelihood, nats per observation
    n: int
    x0: float | None


@numba.njit(cache=True)
def _poisson_term(code, x, y, logfact):
    if code == THRESHOLD:
        if x <= 0.0:
            return np.nan
        return -x + y * np.log(x) - logfact
    return -np.exp(x) + x * y - logfact


@numba.njit(cache=True)
def _conditional_terms(code, p, x0, y, logfact):
    n = y.shape[0]
    out = np.empty(n)
    x = x0
    for k in range(n):
        out[k] = _poisson_term(code, x, y[k], logfact[k])
        x = _link(code, p, x, y[k])
    return out


@numba.njit(cache=True)
def _conditional_sum(code, p, x0, y, logfact):
    s = 0.0
    x = x0
    for k in range(y.shape[0]):
        t = _poisson_term(code, x, y[k], logfact[k])
        if np.isnan(t):
            return np.nan
        s += t
        x = _link(code, p, x, y[k])
    return s


@numba.njit(cache=True)
def _stationary_terms(code, p, y_ext, start, m, logfact):
    # term k uses the state built from y_ext[start+k-1-m .. start+k-1]
    n = y_ext.shape[0] - start
    out = np.empty(n)
    for k in range(n):
        x = _truncated_state(code, p, y_ext, start + k - 1, m)
        out[k] = _poisson_term(code, x, y_ext[start + k], logfact[k])
    return out


def _count_model(model: ModelSpec):
    if model.family is Family.GARCH:
        raise DomainError("likelihood evaluation is provided for the Poisson families only")


def log_factorials(y: np.ndarray) -> np.ndarray:
    return gammaln(np.asarray(y, dtype=float) + 1.0)


def conditional_terms(model: ModelSpec, x0, y) -> np.ndarray:
    """Per-observation terms ``log h(f<y_{1:k-1}>(x0); y_k)``."""
    _count_model(model)
    y = as_observations(model, y)
    terms = _conditional_terms(model.code, model.kernel(), float(x0), y, log_factorials(y))
    if np.any(np.isnan(terms)):
        raise DomainError("filtered state left the family domain")
    return terms


def conditional_loglik(model: ModelSpec, x0, y) -> LikelihoodValue:
    """Average conditional log-likelihood of ``y`` given ``X_0 = x0``."""
    _count_model(model)
    y = as_observations(model, y)
    if y.size == 0:
        raise ValueError("need at least one observation")
    s = _conditional_sum(model.code, model.kernel(), float(x0), y, log_factorials(y))
    if np.isnan(s):
        raise DomainError("filtered state left the family domain")
    return LikelihoodValue(float(s) / y.size, int(y.size), float(x0))


def _default_depth(model):
    return truncation_depth(model.params.contraction)


def stationary_terms(model: ModelSpec, y, history, m: int | None = None) -> np.ndarray:
    _count_model(model)
    m = _default_depth(model) if m is None else int(m)
    y = as_observations(model, y)
    history = as_observations(model, history)
    if history.size < m + 1:
        raise ValueError(f"need at least {m + 1} pre-sample observations for depth {m}, got {history.size}")
    y_ext = np.concatenate([history, y])
    terms = _stationary_terms(model.code, model.kernel(), y_ext, history.size, m, log_factorials(y))
    if np.any(np.isnan(terms)):
        raise DomainError("stationary state left the family domain")
    return terms


def stationary_states(model: ModelSpec, y, history, m: int | None = None) -> np.ndarray:
    """Infinite-past states ``x_0, ..., x_n`` along ``y``.

    The first state is truncated at depth ``m`` from ``history``; the rest
    follow by the recursion, which the infinite-past states satisfy exactly,
    so the truncation error of the first state only contracts afterwards.
    """
    _count_model(model)
    m = _default_depth(model) if m is None else int(m)
    y = as_observations(model, y)
    history = as_observations(model, history)
    if history.size < m + 1:
        raise ValueError(f"need at least {m + 1} pre-sample observations for depth {m}, got {history.size}")
    p = model.kernel()
    x0 = _truncated_state(model.code, p, history, history.size - 1, m)
    return _run_states(model.code, p, x0, y)


def stationary_loglik(model: ModelSpec, y, history, m: int | None = None) -> LikelihoodValue:
    """Average log-likelihood with each state replaced by its infinite-past value.

    ``history`` holds the chronological pre-sample observations; only the
    last ``m + 1`` of them can influence the result.
    """
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("need at least one observation")
    terms = stationary_terms(model, y, history, m)
    return LikelihoodValue(float(terms.sum()) / terms.size, int(terms.size), None)


def loglik_gap(space: ParameterSpace, x0, y, history, theta_grid, m: int | None = None) -> float:
    """``max_theta |conditional - stationary|`` over a finite grid inside the space."""
    m = space.default_truncation() if m is None else int(m)
    worst = 0.0
    for theta in np.atleast_2d(theta_grid):
        model = space.model(theta)
        cond = conditional_loglik(model, x0, y).value
        stat = stationary_loglik(model, y, history, m).value
        worst = max(worst, abs(cond - stat))
    return worst
