import math

import numpy as np
import pytest

from forestdde.errors import DomainError
from forestdde.numerics import (PanelPrimitive, bisect_increasing, bisect_scalar, hermite,
                                hermite_derivative)


def test_hermite_reproduces_cubics():
    p = np.polynomial.Polynomial([0.3, -1.2, 0.7, 2.5])
    dp = p.deriv()
    t0, t1 = 0.4, 1.1
    s = np.linspace(t0, t1, 17)
    got = hermite(t0, t1, p(t0), p(t1), dp(t0), dp(t1), s)
    np.testing.assert_allclose(got, p(s), rtol=1e-13)
    np.testing.assert_allclose(hermite_derivative(t0, t1, p(t0), p(t1), dp(t0), dp(t1), s),
                               dp(s), rtol=1e-12, atol=1e-13)


def test_bisection_vectorised_and_scalar():
    targets = np.array([0.1, 2.0, 7.5])
    x = bisect_increasing(lambda x: x ** 3 - targets, np.zeros(3), np.full(3, 3.0))
    np.testing.assert_allclose(x, np.cbrt(targets), rtol=1e-13)
    assert bisect_scalar(lambda x: math.exp(x) - 2.0, 0.0, 1.0) == pytest.approx(math.log(2), abs=1e-14)


def test_panel_primitive_exact_on_polynomials():
    prim = PanelPrimitive(lambda s: 3 * s ** 2 + 1, np.linspace(-2.0, 0.0, 9))
    assert prim.total == pytest.approx(10.0, rel=1e-14)
    assert float(prim.value(-1.3)) == pytest.approx((-1.3) ** 3 + 8 - 1.3 + 2, rel=1e-13)


def test_knots_reproduced_exactly(f1_run):
    traj = f1_run.trajectory
    np.testing.assert_array_equal(traj.A_at(traj.times), traj.A_knots)
    np.testing.assert_array_equal(traj.tau_at(traj.times), traj.tau_knots)


def test_dense_output_continuous_across_knots(f1_run):
    traj = f1_run.trajectory
    T = traj.times[1:-1:250]
    eps = 1e-9
    left = traj.A_at(T - eps)
    right = traj.A_at(T + eps)
    assert np.abs(left - right).max() < 1e-8


def test_segment_view_matches_channels(f1_run):
    traj = f1_run.trajectory
    seg = traj.segment(123)
    s = 0.5 * (seg.t_lo + seg.t_hi)
    assert seg.A(0, s) == pytest.approx(traj.eval_state(0, s), rel=1e-15)
    assert seg.tau(0, s) == pytest.approx(traj.eval_delay(0, s), rel=1e-15)


def test_scalar_and_vector_lookups_agree(f1_run):
    traj = f1_run.trajectory
    s = np.linspace(-2.0, 50.0, 301)
    vec = traj.A_at(s)[:, 0]
    sca = np.array([traj.A_vector(x)[0] for x in s])
    np.testing.assert_allclose(sca, vec, rtol=1e-14)


def test_history_side_and_domain(f1_run):
    traj = f1_run.trajectory
    assert traj.eval_state(0, -1.5) == 1.0
    with pytest.raises(DomainError):
        traj.eval_state(0, -2.5)
    with pytest.raises(DomainError):
        traj.eval_state(0, 51.0)
    with pytest.raises(DomainError):
        traj.eval_delay(0, -0.1)


def test_primitive_anchors(f1_run):
    traj = f1_run.trajectory
    assert float(traj.primitive(0, np.array([0.0]))[0]) == 0.0
    assert float(traj.primitive(0, np.array([-2.0]))[0]) == pytest.approx(-1.0, abs=1e-15)
    # history part is f(1) = 1/2 per unit time
    assert float(traj.primitive(0, np.array([-1.0]))[0]) == pytest.approx(-0.5, abs=1e-15)


def test_primitive_derivative_is_growth_rate(f1_run):
    traj = f1_run.trajectory
    s = np.array([0.7, 5.123, 31.0, 49.0])
    eps = 1e-5
    fd = (traj.primitive(0, s + eps) - traj.primitive(0, s - eps)) / (2 * eps)
    np.testing.assert_allclose(fd, traj.f_of_Z(0, s), rtol=1e-8)


def test_primitive_scalar_matches_vectorised(f1_run):
    traj = f1_run.trajectory
    for s in (-1.7, 0.0, 3.3333, 27.0, 50.0):
        assert traj.primitive_scalar(0, s) == pytest.approx(float(traj.primitive(0, np.array([s]))[0]),
                                                            abs=1e-14)


def test_append_requires_increasing_times(f1_run):
    from forestdde.history import DenseTrajectory
    from forestdde.model import compute_normalization

    cfg = f1_run.trajectory.config
    traj = DenseTrajectory(cfg, compute_normalization(cfg))
    traj.append(0.0, [1.0], [0.0], [2.0], [0.0])
    with pytest.raises(ValueError):
        traj.append(0.0, [1.0], [0.0], [2.0], [0.0])
