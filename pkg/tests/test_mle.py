import numpy as np
import pytest
from numpy.testing import assert_array_equal

from odts import ConfigurationError
from odts.likelihood import conditional_loglik, stationary_loglik
from odts.mle import (
    consistency_experiment,
    fit,
    identifiability_check,
    lipschitz_condition_check,
    misspecification_experiment,
    start_points,
    threshold_regime_nonempty,
)
from odts.model import ModelSpec, ParameterSpace
from odts.sampling import RngStream
from odts.simulate import simulate

LL_SPACE = ParameterSpace.loglinear_wellspecified(2.0, 0.9)
TH_SPACE = ParameterSpace.threshold_wellspecified(1, 3)
LL_STAR = np.array([0.5, 0.3, 0.4])
TH_STAR = np.array([1.0, 0.2, 0.2, 0.2, 0.2])


@pytest.fixture(scope="module")
def ll_series():
    return simulate(LL_SPACE.model(LL_STAR), n=3000, rng=RngStream(100))


@pytest.fixture(scope="module")
def ll_fit(ll_series):
    return fit(LL_SPACE, ll_series.y, starts=10, rng=RngStream(101))


def test_fit_is_feasible_and_consistent(ll_fit):
    assert LL_SPACE.max_violation(ll_fit.theta_hat) <= 1e-12
    assert ll_fit.converged
    assert np.max(np.abs(ll_fit.theta_hat - LL_STAR)) < 0.15


def test_loglik_matches_reevaluation(ll_series, ll_fit):
    val = conditional_loglik(LL_SPACE.model(ll_fit.theta_hat), ll_fit.x0, ll_series.y).value
    assert abs(val - ll_fit.loglik) <= 1e-9


def test_winner_has_the_best_value(ll_fit):
    assert ll_fit.start_values.shape == (10,)
    assert ll_fit.start_values[ll_fit.winner] == ll_fit.start_values.max()
    assert ll_fit.winner == int(np.argmax(ll_fit.start_values))


def test_refit_from_optimum_stays(ll_series, ll_fit):
    again = fit(LL_SPACE, ll_series.y, initial=ll_fit.theta_hat)
    assert again.starts == 1
    assert np.max(np.abs(again.theta_hat - ll_fit.theta_hat)) < 1e-5
    assert again.loglik >= ll_fit.loglik - 1e-10


def test_fit_is_deterministic(ll_series, ll_fit):
    again = fit(LL_SPACE, ll_series.y, starts=10, rng=RngStream(101))
    assert_array_equal(again.theta_hat, ll_fit.theta_hat)
    assert again.loglik == ll_fit.loglik


def test_best_value_grows_with_starts(ll_series):
    y = ll_series.y[:600]
    best = [fit(LL_SPACE, y, starts=k, rng=RngStream(7)).loglik for k in (1, 3, 10, 12)]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))


def test_start_sequence_has_prefix_property():
    a = start_points(TH_SPACE, 7, RngStream(3))
    b = start_points(TH_SPACE, 23, RngStream(3))
    assert_array_equal(a, b[:7])
    assert all(TH_SPACE.contains(p) for p in b)


def test_all_zero_series_is_flagged():
    res = fit(LL_SPACE, np.zeros(200, dtype=int), starts=3, rng=RngStream(1))
    assert res.flags == ["constant_series", "all_zero_series"]
    assert LL_SPACE.max_violation(res.theta_hat) <= 1e-12
    # b has no effect on this likelihood; the intercept runs to its bound
    assert res.active_constraints
    assert res.theta_hat[0] == pytest.approx(-2.0, abs=1e-6)


def test_constant_nonzero_series_flag():
    res = fit(TH_SPACE, np.full(100, 2), starts=2, rng=RngStream(1))
    assert res.flags == ["constant_series"]


def test_threshold_fit_recovers_parameters():
    traj = simulate(TH_SPACE.model(TH_STAR), n=4000, rng=RngStream(55))
    res = fit(TH_SPACE, traj.y, rng=RngStream(56))
    assert TH_SPACE.max_violation(res.theta_hat) <= 1e-12
    assert abs(res.theta_hat[0] - 1.0) < 0.3
    assert abs(res.theta_hat[1:].sum() - 0.8) < 0.1


def test_consistency_preconditions():
    with pytest.raises(ConfigurationError):
        consistency_experiment(LL_SPACE, [0.5, 0.6, 0.4], (100,), 1, RngStream(0))
    with pytest.raises(ConfigurationError):
        consistency_experiment(ParameterSpace.loglinear_misspecified(), LL_STAR, (100,), 1, RngStream(0))
    empty = ParameterSpace.threshold_wellspecified(0.4, 0.6)
    with pytest.raises(ConfigurationError):
        consistency_experiment(empty, TH_STAR, (100,), 1, RngStream(0))
    assert not threshold_regime_nonempty(0.4, 0.6)
    assert threshold_regime_nonempty(0.5, 1.5)
    assert threshold_regime_nonempty(-1, 0.5)


def test_small_consistency_run_reproduces(tmp_path):
    sp = ParameterSpace.threshold_wellspecified(0.5, 1.5)
    a = consistency_experiment(sp, TH_STAR, (200, 400), 2, RngStream(9), starts=2)
    b = consistency_experiment(sp, TH_STAR, (200, 400), 2, RngStream(9), starts=2)
    assert a.to_csv() == b.to_csv()
    assert a.summary_json() == b.summary_json()
    rows = a.to_csv().splitlines()
    assert rows[0] == "family,n,replicate,seed,coord,estimate,truth"
    assert len(rows) == 1 + 2 * 2 * 5
    assert a.estimates.shape == (2, 2, 5)


def test_misspec_with_matching_family_reduces_to_consistency():
    gen = LL_SPACE.model(LL_STAR)
    c = consistency_experiment(LL_SPACE, LL_STAR, (300,), 3, RngStream(4), starts=2)
    m = misspecification_experiment(gen, LL_SPACE, (300,), 3, RngStream(4), starts=2)
    assert_array_equal(c.estimates, m.estimates)
    assert m.theta_star is None
    assert m.to_csv().splitlines()[1].endswith(",")


def test_misspec_rejects_unstable_generator():
    bad = ModelSpec.threshold(1.0, 0.6, 0.5, 0.0, 0.0, 1, 3, strict=False)
    with pytest.raises(ConfigurationError):
        misspecification_experiment(bad, LL_SPACE, (100,), 1, RngStream(0))
    with pytest.raises(ConfigurationError):
        misspecification_experiment(ModelSpec.garch(0.1, 0.2, 0.3), LL_SPACE, (100,), 1, RngStream(0))


@pytest.mark.parametrize("space, star", [(LL_SPACE, LL_STAR), (TH_SPACE, TH_STAR)])
def test_lipschitz_condition(space, star):
    traj = simulate(space.model(star), n=2000, rng=RngStream(8))
    rng = np.random.default_rng(1)
    thetas = space.latin_hypercube(2000, RngStream(9))
    x = traj.x[:-1]
    xp = x + rng.normal(0, 2, size=x.size)
    if space.family.value == "threshold":
        xp = np.abs(xp)
    xp[:10] = x[:10]
    rep = lipschitz_condition_check(space, thetas, traj.y, x, xp)
    assert rep.verdict
    assert rep.max_ratio <= 0.9 + 1e-9
    assert rep.mean_log_rho == pytest.approx(np.log(0.9))


def test_identifiability_on_long_series():
    traj = simulate(LL_SPACE.model(LL_STAR), n=10**5, rng=RngStream(12))
    grid = LL_SPACE.latin_hypercube(256, RngStream(13))
    rep = identifiability_check(LL_SPACE, LL_STAR, grid, traj.y, traj.history)
    assert rep.verdict
    assert rep.grid_size == 256


def test_identifiability_skips_theta_star():
    traj = simulate(LL_SPACE.model(LL_STAR), n=500, rng=RngStream(12))
    with pytest.raises(ValueError):
        identifiability_check(LL_SPACE, LL_STAR, [LL_STAR], traj.y, traj.history)


def test_pseudo_true_dominates_grid():
    gen = LL_SPACE.model(LL_STAR)
    space = ParameterSpace.threshold_misspecified(2.5, 6.5)
    traj = simulate(gen, n=20_000, rng=RngStream(21))
    res = fit(space, traj.y, rng=RngStream(22))
    best = stationary_loglik(space.model(res.theta_hat), traj.y, traj.history).value
    grid = space.latin_hypercube(256, RngStream(23))
    others = [stationary_loglik(space.model(t), traj.y, traj.history).value for t in grid]
    assert best > max(others)
