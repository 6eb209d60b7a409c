import numpy as np
import pytest

from forestdde.errors import UnsupportedError
from forestdde.fixtures import F3, degenerate
from forestdde.integrator import IntegratorSettings, solve
from forestdde.model import InitialHistory, ModelConfig, SpeciesParams
from forestdde.smith import build_transform, history_in_x, smith_from_config


@pytest.fixture(scope="module")
def pair(f1_run):
    tr = build_transform(f1_run.trajectory)
    sol = smith_from_config(f1_run.trajectory.config, tr.x_current, steps_per_delay=50)
    return f1_run.trajectory, tr, sol


def test_delta_is_the_normalization(pair):
    _, tr, sol = pair
    assert tr.delta == pytest.approx(1.0, abs=1e-13)
    assert sol.delta == tr.delta


def test_W_matches_A(pair):
    traj, tr, sol = pair
    x = tr.Phi(traj.times)
    assert np.abs(sol.W_at(x) - traj.A_knots[:, 0]).max() < 1e-8


def test_clock_recovers_time(pair):
    traj, tr, sol = pair
    x = tr.Phi(traj.times)
    assert np.abs(sol.clock_at(x) - traj.times).max() < 1e-8


def test_recovered_delay(pair):
    traj, tr, sol = pair
    x = tr.Phi(traj.times[::20])
    assert np.abs(sol.recovered_delay(x) - traj.tau_knots[::20, 0]).max() < 1e-8


def test_pullback_identity(pair):
    traj, tr, _ = pair
    T = traj.times
    assert np.abs(tr.Phi(T - traj.tau_knots[:, 0]) - (tr.Phi(T) - tr.delta)).max() < 1e-10


def test_phi_inverse(pair):
    traj, tr, _ = pair
    t = np.array([-1.5, 0.0, 3.7, 42.0])
    np.testing.assert_allclose(tr.Phi_inv(tr.Phi(t)), t, atol=1e-12)
    np.testing.assert_allclose(tr.W(tr.Phi(t)), traj.A_at(t)[:, 0], rtol=1e-12)


def test_phi_strictly_increasing(pair):
    _, tr, _ = pair
    assert np.all(np.diff(tr.phi_knots) > 0)


def test_history_in_x_sinusoidal():
    sp = SpeciesParams(0.1, 0.05, 0.2, 2.0, history=InitialHistory.sinusoidal(1.0, 0.5, 1.0))
    cfg = ModelConfig([sp], [[1.0]])
    delta, W_hist, s_of_x = history_in_x(cfg)
    s = s_of_x(np.array([-delta, 0.0]))
    np.testing.assert_allclose(s, [-2.0, 0.0], atol=1e-12)
    res = solve(cfg, IntegratorSettings(h=0.01, t_end=20.0))
    tr = build_transform(res.trajectory)
    sol = smith_from_config(cfg, tr.x_current, steps_per_delay=100)
    x = tr.Phi(res.trajectory.times)
    assert np.abs(sol.W_at(x) - res.trajectory.A_knots[:, 0]).max() < 1e-6


def test_single_species_only():
    res = solve(F3(), IntegratorSettings(h=0.1, t_end=1.0), residuals=False)
    with pytest.raises(UnsupportedError):
        build_transform(res.trajectory)


def test_zero_delay_unsupported():
    with pytest.raises(UnsupportedError):
        smith_from_config(degenerate(), 1.0)
