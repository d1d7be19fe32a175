import numpy as np
import pytest
from numpy.testing import assert_allclose

from odts.optimize import projected_nelder_mead


def box(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return lambda z: np.clip(z, lo, hi)


def test_interior_quadratic():
    target = np.array([0.3, -0.2, 0.75])
    res = projected_nelder_mead(lambda t: np.sum((t - target) ** 2), [0, 0, 0], box([-1] * 3, [1] * 3), [2, 2, 2])
    assert res.converged
    assert_allclose(res.x, target, atol=1e-6)


def test_minimum_on_the_boundary():
    target = np.array([2.0, 0.5])
    res = projected_nelder_mead(lambda t: np.sum((t - target) ** 2), [0.1, 0.1], box([0, 0], [1, 1]), [1, 1])
    assert_allclose(res.x, [1.0, 0.5], atol=1e-6)
    assert np.all(res.x <= 1.0)


def test_rosenbrock_badly_scaled():
    def rosen(t):
        x, y = t[0], t[1] / 100
        return (1 - x) ** 2 + 100 * (y - x * x) ** 2

    res = projected_nelder_mead(rosen, [-1.0, 100.0], box([-2, -200], [2, 200]), [4, 400], max_iter=20000)
    assert_allclose(res.x, [1.0, 100.0], rtol=1e-4)


def test_non_finite_values_are_rejected():
    f = lambda t: np.nan if t[0] > 0.5 else (t[0] - 1) ** 2  # noqa: E731
    res = projected_nelder_mead(f, [0.0], box([-1], [1]), [2])
    assert res.x[0] <= 0.5
    assert res.fun == pytest.approx((res.x[0] - 1) ** 2)


def test_iteration_cap_reports_non_convergence():
    res = projected_nelder_mead(lambda t: float(np.sum(t**2)), [0.9, 0.9], box([-1, -1], [1, 1]), [2, 2],
                                max_iter=3, max_restarts=0)
    assert not res.converged
    assert res.iterations == 3
