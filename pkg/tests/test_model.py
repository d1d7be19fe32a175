import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from odts import ConfigurationError, DomainError
from odts.model import (
    LinearConstraint,
    ModelSpec,
    ParameterSpace,
    iterate_link,
    link,
    log_observation_density,
    poisson_weights,
    stationary_state,
    state_path,
    truncation_depth,
    truncation_error_bound,
)

finite = st.floats(-5, 5, allow_nan=False)
counts = st.integers(0, 60)


@pytest.mark.parametrize(
    "model, x, y, expected",
    [
        (ModelSpec.threshold(1, 0.5, 0.2, 0, 0, 1, 3), 2, 0, 2.0),
        (ModelSpec.threshold(1, 0.5, 0.2, 0.3, 0.1, 1, 3), 2, 2, 2.4),
        (ModelSpec.loglinear(0.7, 0, 0), 3.3, 5, 0.7),
        (ModelSpec.garch(0.1, 0.2, 0.3), 1, 2, 1.5),
    ],
)
def test_link_examples(model, x, y, expected):
    assert link(model, x, y) == pytest.approx(expected, abs=1e-15)


def test_link_rejects_bad_observations():
    m = ModelSpec.loglinear(0.1, 0.2, 0.3)
    for bad in (-1, 1.5, float("nan"), True):
        with pytest.raises(DomainError):
            link(m, 0.0, bad)
    assert link(ModelSpec.garch(0.1, 0.2, 0.3), 1.0, -1.5) == pytest.approx(0.1 + 0.2 + 0.3 * 2.25)


@pytest.mark.parametrize(
    "model, x, y, expected",
    [
        (ModelSpec.threshold(1, 0.5, 0.2, 0, 0, 1, 3), 1.0, 0, -1.0),
        (ModelSpec.threshold(1, 0.5, 0.2, 0, 0, 1, 3), 2.0, 2, -2 + math.log(2)),
        (ModelSpec.loglinear(0, 0, 0), 0.0, 0, -1.0),
    ],
)
def test_density_examples(model, x, y, expected):
    assert log_observation_density(model, x, y) == pytest.approx(expected, rel=1e-14)


def test_density_domain():
    with pytest.raises(DomainError):
        log_observation_density(ModelSpec.threshold(1, 0.5, 0.2, 0, 0, 1, 3), 0.0, 1)
    with pytest.raises(DomainError):
        log_observation_density(ModelSpec.garch(0.1, 0.2, 0.3), -1.0, 0.5)


def test_large_counts_use_log_gamma():
    m = ModelSpec.threshold(1, 0.5, 0.2, 0, 0, 1, 3)
    v = log_observation_density(m, 300.0, 300)
    assert_allclose(v, float(-300 + 300 * mpmath.log(300) - mpmath.loggamma(301)), rtol=1e-12)


@given(x=st.floats(0, 50), xp=st.floats(0, 50), y=counts)
def test_threshold_link_is_affine(x, xp, y):
    m = ModelSpec.threshold(0.7, 0.3, 0.2, 0.25, -0.1, 1.5, 4)
    slope = m.params.slope(y)
    assert link(m, x, y) - link(m, xp, y) == pytest.approx(slope * (x - xp), abs=1e-12)


@given(x=finite, xp=finite, y=counts)
def test_loglinear_link_is_affine(x, xp, y):
    m = ModelSpec.loglinear(0.3, -0.6, 0.45)
    assert link(m, x, y) - link(m, xp, y) == pytest.approx(-0.6 * (x - xp), abs=1e-12)


@given(x=st.floats(0.01, 50), xp=st.floats(0.01, 50), y=st.floats(-10, 10))
def test_garch_link_is_affine(x, xp, y):
    m = ModelSpec.garch(0.1, 0.35, 0.2)
    assert link(m, x, y) - link(m, xp, y) == pytest.approx(0.35 * (x - xp), abs=1e-12)


@pytest.mark.parametrize("x", np.r_[0.01, 0.5, np.linspace(1, 30, 59)])
def test_density_normalizes(x):
    ys, _ = poisson_weights(x)
    th = ModelSpec.threshold(1, 0.5, 0.2, 0, 0, 1, 3)
    ll = ModelSpec.loglinear(0, 0, 0)
    for model, state in ((th, x), (ll, math.log(x))):
        total = math.fsum(math.exp(log_observation_density(model, state, int(y))) for y in ys)
        # each term carries ~1e-15 relative rounding, so the sum can sit a few dozen ulps above one
        assert 1 - 1e-10 <= total <= 1 + 64 * np.finfo(float).eps


def test_iterate_empty_and_intercept():
    m = ModelSpec.loglinear(0.4, 0.0, 0.7)
    assert iterate_link(m, 3.1, []) == 3.1
    assert iterate_link(m, 3.1, [4, 0, 9]) == pytest.approx(0.4 + 0.7 * math.log(10))


def _threshold_closed_form(p, x, ys):
    # product-sum form with exact rational-style accumulation
    mpmath.mp.dps = 40
    a_of = lambda y: p.a + p.c * (y <= p.L or y >= p.U)  # noqa: E731
    b_of = lambda y: p.b * y + p.d * y * (y <= p.L or y >= p.U)  # noqa: E731
    t = len(ys)
    head = mpmath.mpf(x)
    for y in ys:
        head *= a_of(y)
    tail = mpmath.mpf(0)
    for j in range(t):
        prod = mpmath.mpf(1)
        for ell in range(j):
            prod *= a_of(ys[t - 1 - ell])
        tail += (p.omega + b_of(ys[t - 1 - j])) * prod
    return float(head + tail)


def test_iterate_threshold_example():
    m = ModelSpec.threshold(1, 0.4, 0.1, 0.2, 0.05, 1, 3)
    assert_allclose(iterate_link(m, 1.0, [0, 2]), _threshold_closed_form(m.params, 1.0, [0, 2]), rtol=1e-12)
    # by hand: y=0 is outside, y=2 inside
    assert iterate_link(m, 1.0, [0, 2]) == pytest.approx(1 + 0.4 * (1 + 0.6) + 0.2)


@given(
    omega=st.floats(0.1, 3), a=st.floats(0.05, 0.6), b=st.floats(0.05, 0.6), c=st.floats(-0.04, 0.3),
    d=st.floats(-0.04, 0.3), x=st.floats(0, 10), ys=st.lists(counts, max_size=25),
)
def test_iterate_matches_threshold_closed_form(omega, a, b, c, d, x, ys):
    m = ModelSpec.threshold(omega, a, b, c, d, 1.5, 5)
    assert_allclose(iterate_link(m, x, ys), _threshold_closed_form(m.params, x, ys), rtol=1e-10)


@given(d=finite, a=st.floats(-0.95, 0.95), b=st.floats(-1, 1), x=finite, ys=st.lists(counts, max_size=25))
def test_iterate_matches_loglinear_closed_form(d, a, b, x, ys):
    m = ModelSpec.loglinear(d, a, b)
    t = len(ys)
    mpmath.mp.dps = 40
    want = (mpmath.mpf(d) * (1 - mpmath.mpf(a) ** t) / (1 - mpmath.mpf(a)) + mpmath.mpf(a) ** t * x
            + b * mpmath.fsum(mpmath.mpf(a) ** j * mpmath.log1p(ys[t - 1 - j]) for j in range(t)))
    assert_allclose(iterate_link(m, x, ys), float(want), rtol=1e-10, atol=1e-12)


def test_state_path_replays_iterates():
    m = ModelSpec.threshold(1, 0.4, 0.1, 0.2, 0.05, 1, 3)
    ys = [0, 3, 2, 5, 1]
    xs = state_path(m, 2.0, ys)
    assert xs[0] == 2.0
    for k in range(len(ys)):
        assert xs[k + 1] == iterate_link(m, 2.0, ys[: k + 1])


def test_stationary_state_examples():
    rng = np.random.default_rng(3)
    y = rng.poisson(3, size=100)
    assert stationary_state(ModelSpec.loglinear(0.5, 0.5, 0), y, m=30) == pytest.approx(1.0)
    assert stationary_state(ModelSpec.loglinear(0, 0.5, 1), np.zeros(40), m=30) == 0.0
    with pytest.raises(ValueError):
        stationary_state(ModelSpec.loglinear(0, 0.5, 1), np.zeros(10), m=30)
    with pytest.raises(DomainError):
        stationary_state(ModelSpec.garch(0.1, 0.2, 0.3), np.zeros(10), m=3)


def test_stationary_state_loglinear_series():
    m = ModelSpec.loglinear(0.3, 0.6, 0.25)
    y = np.array([4, 0, 7, 1, 2, 9, 3, 0, 0, 5])
    depth = y.size - 1
    want = 0.3 / (1 - 0.6) + 0.25 * sum(0.6**j * math.log1p(y[j]) for j in range(y.size))
    assert_allclose(stationary_state(m, y, m=depth), want, rtol=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_stationary_truncation_bound(seed):
    rng = np.random.default_rng(seed)
    m = ModelSpec.threshold(1.0, 0.3, 0.2, 0.25, 0.1, 1, 3)
    y = rng.poisson(4.0, size=200)
    for lo, hi in ((50, 60), (20, 30), (50, 50 + 10)):
        gap = abs(stationary_state(m, y, lo) - stationary_state(m, y, hi))
        assert gap <= truncation_error_bound(m, y, lo, hi) * (1 + 1e-12) + 1e-15


def test_truncation_depth_default():
    assert truncation_depth(0.9) == 219
    assert 0.9**219 <= 1e-10 < 0.9**218
    with pytest.raises(ConfigurationError):
        truncation_depth(1.0)


def test_threshold_params_validation():
    with pytest.raises(ConfigurationError):
        ModelSpec.threshold(1, 0.0, 0.2, 0, 0, 1, 3)
    with pytest.raises(ConfigurationError):
        ModelSpec.threshold(1, 0.2, 0.2, -0.3, 0, 1, 3)
    with pytest.raises(ConfigurationError):
        ModelSpec.threshold(1, 0.2, 0.2, 0, 0, 3, 1)
    relaxed = ModelSpec.threshold(1, 0, 0, 0, 0, 1, 3, strict=False)
    assert relaxed.fixed_point() == 1.0
    with pytest.raises(ConfigurationError):
        ModelSpec.garch(0.1, 0.0, 0.3)


def test_infinite_upper_threshold():
    m = ModelSpec.threshold(1, 0.3, 0.2, 0.5, 0.1, 0.5, math.inf)
    assert link(m, 2.0, 0) == pytest.approx(1 + 0.8 * 2)
    assert link(m, 2.0, 7) == pytest.approx(1 + 0.3 * 2 + 0.2 * 7)


# -- parameter spaces -------------------------------------------------------


def test_project_feasible_is_identity():
    sp = ParameterSpace.loglinear_wellspecified(1.0, 0.9)
    theta = np.array([0.2, 0.3, 0.4])
    assert np.array_equal(sp.project(theta), theta)


def test_project_loglinear_binding_sum():
    sp = ParameterSpace.loglinear_wellspecified(1.0, 0.9)
    out = sp.project([0.0, 0.9, 0.9])
    assert sp.contains(out)
    assert out[1] + out[2] == pytest.approx(0.9, abs=2e-9)
    assert 0.9 - (out[1] + out[2]) >= 0


@given(theta=st.tuples(st.floats(-20, 20), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3)))
def test_project_threshold_is_feasible_and_idempotent(theta):
    sp = ParameterSpace.threshold_misspecified(1, 3)
    out = sp.project(np.array(theta))
    assert sp.max_violation(out) <= 1e-12
    assert np.array_equal(sp.project(out), out)


@given(theta=st.tuples(st.floats(-5, 5), st.floats(-3, 3), st.floats(-3, 3)))
def test_project_loglinear_is_feasible_and_idempotent(theta):
    sp = ParameterSpace.loglinear_wellspecified(2.0, 0.9)
    out = sp.project(np.array(theta))
    assert sp.max_violation(out) <= 1e-12
    assert np.array_equal(sp.project(out), out)


def test_empty_space_is_rejected():
    with pytest.raises(ConfigurationError):
        ParameterSpace("loglinear", [-1, -0.5, -0.5], [1, 0.5, 0.5], [LinearConstraint("a<=-1", (0, 1, 0), -1.0)])


def test_space_constraint_sets():
    well = ParameterSpace.threshold_wellspecified(1, 3)
    names = {c.name for c in well.constraints}
    assert {"omega>=alpha_low", "a+c>=alpha_low", "b+d>=alpha_low", "a<=alpha_bar", "a+b+c+d<=alpha_bar"} <= names
    miss = ParameterSpace.threshold_misspecified(1, 3)
    assert "a+c<=alpha_bar" in {c.name for c in miss.constraints}
    assert well.contains([1, 0.2, 0.2, 0.2, 0.2])
    assert not well.contains([1, 0.3, 0.3, 0.2, 0.2])
    ll = ParameterSpace.loglinear_wellspecified(2.0, 0.9)
    assert ll.contains([0.5, 0.3, 0.4]) and not ll.contains([0.5, 1.2, 0.4])
    assert ll.default_truncation() == 219


def test_clip_state_warns():
    sp = ParameterSpace.threshold_misspecified(1, 3)
    with pytest.warns(UserWarning):
        assert sp.clip_state(0.0) == sp.alpha_low
