import io
import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal
from scipy import stats

from odts import DivergenceError, DomainError
from odts.model import ModelSpec, iterate_link, link
from odts.sampling import RngStream
from odts.simulate import (
    coupling_probability,
    read_trajectory_csv,
    replay,
    simulate,
    simulate_coupled,
    simulate_qsharp,
)

THRESHOLD = ModelSpec.threshold(1.0, 0.2, 0.2, 0.2, 0.2, 1, 3)
LOGLINEAR = ModelSpec.loglinear(0.5, 0.3, 0.4)


def test_constant_chain():
    m = ModelSpec.threshold(1, 0, 0, 0, 0, 1, 3, strict=False)
    traj = simulate(m, x0=4.0, n=50, rng=RngStream(1), burn_in=0)
    assert traj.x[0] == 4.0
    assert np.all(traj.x[1:] == 1.0)


def test_time_average_stabilizes():
    traj = simulate(LOGLINEAR, n=10**5, rng=RngStream(12))
    half = traj.x.size // 2
    assert abs(traj.x[:half].mean() - traj.x[half:].mean()) < 0.05


@pytest.mark.parametrize("model", [THRESHOLD, LOGLINEAR, ModelSpec.garch(0.1, 0.3, 0.5)])
def test_replay_is_exact(model):
    traj = simulate(model, n=500, rng=RngStream(3))
    assert len(traj.x) == len(traj.y) + 1
    assert_array_equal(replay(model, traj.x[0], traj.y), traj.x)
    assert iterate_link(model, traj.x[0], traj.y[:10]) == traj.x[10]
    for k in (0, 7, 499):
        assert traj.x[k + 1] == link(model, traj.x[k], traj.y[k])


def test_seeded_runs_repeat():
    a = simulate(THRESHOLD, n=200, rng=RngStream(5, 2))
    b = simulate(THRESHOLD, n=200, rng=RngStream(5, 2))
    assert_array_equal(a.x, b.x)
    assert_array_equal(a.y, b.y)
    assert a.history.size == 1000


def test_default_start_is_fixed_point():
    traj = simulate(THRESHOLD, n=1, rng=RngStream(0), burn_in=0)
    assert traj.x[0] == pytest.approx(1 / (1 - 0.2 - 0.2))
    traj = simulate(LOGLINEAR, n=1, rng=RngStream(0), burn_in=0)
    assert traj.x[0] == pytest.approx(0.5 / 0.7)


def test_divergence_names_step():
    m = ModelSpec.loglinear(1.0, 0.99, 0.9)
    with pytest.raises(DivergenceError) as exc:
        simulate(m, x0=20.0, n=10**6, rng=RngStream(0), burn_in=0)
    assert exc.value.step >= 1


def test_bad_initial_states():
    with pytest.raises(DomainError):
        simulate(THRESHOLD, x0=-1.0, n=5, rng=RngStream(0))
    with pytest.raises(DomainError):
        simulate(ModelSpec.garch(0.1, 0.3, 0.5), x0=0.0, n=5, rng=RngStream(0))
    with pytest.raises(DomainError):
        simulate_coupled(ModelSpec.garch(0.1, 0.3, 0.5), 1.0, 2.0, 5, RngStream(0))


@pytest.mark.parametrize("model", [THRESHOLD, LOGLINEAR])
def test_coupled_equal_starts_stay_together(model):
    path = simulate_coupled(model, 2.0, 2.0, 300, RngStream(1))
    assert np.all(path.u == 1)
    assert_array_equal(path.x, path.x_prime)
    assert path.t_fail == math.inf


def test_coupled_one_step_coin():
    reps = 10**4
    hits = 0
    for r in range(reps):
        hits += simulate_coupled(THRESHOLD, 1.0, 2.0, 1, RngStream(9, r)).u[0]
    p = math.exp(-1)
    assert abs(hits / reps - p) < 5 * math.sqrt(p * (1 - p) / reps)
    assert coupling_probability(THRESHOLD, 1.0, 2.0) == pytest.approx(p)


def test_coupled_path_fields():
    path = simulate_coupled(THRESHOLD, 1.0, 6.0, 200, RngStream(4))
    fails = np.flatnonzero(path.u == 0)
    assert path.t_fail == (fails[0] + 1 if fails.size else math.inf)
    assert_array_equal(replay(THRESHOLD, 1.0, path.y), path.x)
    assert_array_equal(replay(THRESHOLD, 6.0, path.y_prime), path.x_prime)
    assert np.all((path.u == 1) <= (path.y == path.y_prime))


@pytest.mark.parametrize("model, start", [(THRESHOLD, (1.0, 4.0)), (LOGLINEAR, (-0.5, 1.5))])
def test_coupled_marginals_match_simulate(model, start):
    reps, n = 4000, 3
    xs = np.empty(reps)
    xps = np.empty(reps)
    singles = np.empty(reps)
    for r in range(reps):
        path = simulate_coupled(model, start[0], start[1], n, RngStream(6, r))
        xs[r], xps[r] = path.x[-1], path.x_prime[-1]
        singles[r] = simulate(model, x0=start[1], n=n, rng=RngStream(60, r), burn_in=0).x[-1]
    ref = np.empty(reps)
    for r in range(reps):
        ref[r] = simulate(model, x0=start[0], n=n, rng=RngStream(61, r), burn_in=0).x[-1]
    assert stats.ks_2samp(xs, ref).pvalue > 1e-3
    assert stats.ks_2samp(xps, singles).pvalue > 1e-3


def test_qsharp_loglinear_gap_is_deterministic():
    path = simulate_qsharp(LOGLINEAR, -1.0, 2.0, 40, RngStream(2))
    gaps = np.abs(path.x - path.x_prime)
    np.testing.assert_allclose(gaps, 3.0 * 0.3 ** np.arange(41), rtol=1e-9, atol=1e-15)
    assert np.all(path.u == 1)


def test_qsharp_threshold_factor_two_valued():
    m = ModelSpec.threshold(1.0, 0.3, 0.2, 0.2, 0.1, 1, 3)
    for r in range(200):
        path = simulate_qsharp(m, 1.0, 5.0, 1, RngStream(3, r))
        factor = abs(path.x[1] - path.x_prime[1]) / 4.0
        assert min(abs(factor - 0.3), abs(factor - 0.5)) < 1e-12


def test_qsharp_equal_starts():
    path = simulate_qsharp(THRESHOLD, 2.5, 2.5, 100, RngStream(8))
    assert_array_equal(path.x, path.x_prime)


def test_csv_round_trip(tmp_path):
    traj = simulate(THRESHOLD, n=100, rng=RngStream(3))
    path = tmp_path / "t.csv"
    text = traj.to_csv(path)
    assert text.splitlines()[0] == "k,x,y"
    assert text.splitlines()[1].endswith(",")
    x, y = read_trajectory_csv(path)
    assert_array_equal(x, traj.x)
    assert_array_equal(y, traj.y)
    buf = io.StringIO()
    traj.to_csv(buf)
    assert buf.getvalue() == text
