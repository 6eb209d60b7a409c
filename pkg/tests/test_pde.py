import math

import numpy as np
import pytest

from forestdde.errors import NumericalError, UnsupportedError
from forestdde.fixtures import F1, F3
from forestdde.integrator import IntegratorSettings, solve
from forestdde.model import equilibrium
from forestdde.pde import PdeParams, consistent_pde_init, pde_solve


@pytest.fixture(scope="module")
def params():
    return PdeParams.from_config(F1())


def test_initial_profile_cell_averages(params):
    grid, matched = consistent_pde_init(1.0, params, Ns=100)
    f0 = 0.5
    # exact integral of the characteristic profile over the whole span
    total = 0.2 * 1.0 / f0 * f0 / 0.05 * (1 - math.exp(-0.05 / f0))
    assert grid.j.sum() * grid.ds == pytest.approx(total, rel=1e-12)
    assert matched.species[0].tau0 == pytest.approx(2.0)


def test_matches_delay_equation(params):
    errs = []
    for Ns in (250, 500):
        grid, matched = consistent_pde_init(1.0, params, Ns=Ns)
        series = pde_solve(grid, 20.0)
        ref = solve(matched, IntegratorSettings(h=0.01, t_end=20.0), residuals=False).trajectory
        A = ref.A_at(series.t)[:, 0]
        errs.append(np.max(np.abs(series.A - A) / A))
        assert series.min_j >= 0
    assert errs[0] < 2e-3
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)


def test_equilibrium_stays_flat(params):
    A_star, _ = equilibrium(F1(), 0, 1.0)
    grid, _ = consistent_pde_init(A_star, params, Ns=1000)
    series = pde_solve(grid, 30.0)
    assert np.abs(series.A / A_star - 1).max() < 1e-3


def test_no_births_decays_exponentially(params):
    p0 = PdeParams(0.1, 0.05, 0.0, params.f, 1.0)
    grid, matched = consistent_pde_init(1.0, p0, Ns=1000)
    assert matched is None
    series = pde_solve(grid, 30.0)
    assert np.abs(series.A / np.exp(-0.1 * series.t) - 1).max() < 1e-3


def test_courant_number_respected(params):
    grid, _ = consistent_pde_init(1.0, params, Ns=200, cfl=0.5)
    series = pde_solve(grid, 5.0)
    dt = np.diff(series.t)[:-1]
    f = params.f(series.A[:-2])
    assert np.all(f * dt / grid.ds <= 0.5 * (1 + 1e-12))


def test_aborts_when_growth_rate_explodes(params):
    p0 = PdeParams(0.5, 0.05, 0.0, params.f, 1.0)
    grid, _ = consistent_pde_init(100.0, p0, Ns=100)
    with pytest.raises(NumericalError):
        pde_solve(grid, 50.0)


def test_single_species_only():
    with pytest.raises(UnsupportedError):
        PdeParams.from_config(F3())
