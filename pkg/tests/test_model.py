import math

import numpy as np
import pytest

from forestdde.errors import DomainError, UnsupportedError, ValidationError
from forestdde.fixtures import F1, F3, f1_species
from forestdde.model import (CompetitionFunction, InitialHistory, ModelConfig, SpeciesParams,
                             compute_normalization, equilibrium, eval_f, growth_ratio_bound,
                             weighted_total)


@pytest.mark.parametrize("x, expected", [(0.0, 1.0), (1.0, 0.5), (3.0, 0.25)])
def test_rational_unit_examples(x, expected):
    assert eval_f(CompetitionFunction.rational(), x) == pytest.approx(expected, rel=1e-15)


def test_rational_general_form():
    f = CompetitionFunction.rational(kappa=2.0, theta=2.0, p=2.0)
    assert eval_f(f, 2.0) == pytest.approx(1.0)
    assert eval_f(f, 4.0) == pytest.approx(0.4)


def test_exponential_and_constant():
    assert eval_f(CompetitionFunction.exponential(3.0, 0.5), 2.0) == pytest.approx(3.0 / math.e)
    assert eval_f(CompetitionFunction.constant(0.7), 123.0) == 0.7


def test_scalar_closure_matches_vectorised():
    xs = np.linspace(0, 50, 101)
    for f in (CompetitionFunction.rational(1.5, 0.7, 2.0), CompetitionFunction.rational(1, 2, 1.3),
              CompetitionFunction.exponential(2.0, 0.1), CompetitionFunction.constant(0.3)):
        fs = f.scalar()
        np.testing.assert_allclose([fs(x) for x in xs], f(xs), rtol=1e-15)


@pytest.mark.parametrize("x", [-1e-9, math.nan, math.inf])
def test_eval_f_rejects_bad_arguments(x):
    with pytest.raises(ValidationError):
        eval_f(CompetitionFunction.rational(), x)


def test_bad_competition_parameters():
    with pytest.raises(ValidationError):
        CompetitionFunction.rational(theta=0.0)
    with pytest.raises(ValidationError):
        CompetitionFunction("sigmoid")


def test_inverse():
    f = CompetitionFunction.rational(2.0, 3.0, 1.5)
    assert f(f.inverse(0.4)) == pytest.approx(0.4, rel=1e-14)
    assert f.inverse(2.5) is None
    assert CompetitionFunction.constant().inverse(1.0) is None


def test_growth_ratio_bound_against_grid_sup():
    f = CompetitionFunction.rational(1.0, 1.0, 2.0)
    x = np.logspace(-6, 8, 200001)
    grid_sup = np.max(f(x) / f(3.0 * x))
    bound = growth_ratio_bound(f, 3.0)
    assert bound == 9.0
    assert grid_sup <= bound * (1 + 1e-14)
    assert grid_sup == pytest.approx(bound, rel=1e-6)


def test_growth_ratio_bound_errors():
    with pytest.raises(UnsupportedError):
        growth_ratio_bound(CompetitionFunction.exponential(), 2.0)
    with pytest.raises(ValidationError):
        growth_ratio_bound(CompetitionFunction.rational(), 0.5)
    assert growth_ratio_bound(CompetitionFunction.constant(), 4.0) == 1.0


def test_weighted_total():
    cfg = F3()
    assert weighted_total(cfg, 0, [2.0, 4.0]) == 4.0
    assert weighted_total(cfg, 1, [2.0, 4.0]) == 5.0
    with pytest.raises(ValidationError):
        weighted_total(cfg, 0, [1.0])


def test_normalization_fixtures():
    assert compute_normalization(F1()).C == pytest.approx((1.0,), abs=1e-13)
    assert compute_normalization(F3()).C == pytest.approx((0.8, 0.8), abs=1e-13)


def _trapezoid(fn, a, b, n=1_000_000):
    s = np.linspace(a, b, n + 1)
    return np.trapezoid(fn(s), s)


def test_normalization_ln2_against_trapezoid():
    # phi(s) = -s on [-1, 0] with f = 1/(1+x): integral of 1/(1-s) is ln 2
    sp = SpeciesParams(0.1, 0.05, 0.2, 1.0, CompetitionFunction.rational(),
                       InitialHistory.linear(0.0, -1.0))
    C = compute_normalization(ModelConfig([sp], [[1.0]]))[0]
    assert C == pytest.approx(math.log(2.0), abs=1e-13)
    assert C == pytest.approx(_trapezoid(lambda s: 1 / (1 - s), -1.0, 0.0), abs=1e-10)


def test_normalization_sampled_history_with_kinks():
    h = InitialHistory.sampled([-3.0, -1.7, -0.4, 0.0], [2.0, 0.5, 3.0, 1.0])
    sp = SpeciesParams(0.1, 0.05, 0.2, 3.0, CompetitionFunction.rational(1.0, 2.0, 2.0), h)
    C = compute_normalization(ModelConfig([sp], [[1.5]]))[0]
    oracle = _trapezoid(lambda s: sp.f(1.5 * h(s)), -3.0, 0.0)
    assert C == pytest.approx(oracle, abs=1e-9)


def test_normalization_coupled_sinusoidal():
    h1 = InitialHistory.sinusoidal(2.0, 0.5, 1.3)
    h2 = InitialHistory.linear(1.0, 0.2)
    sp1 = SpeciesParams(0.1, 0.05, 0.2, 2.5, CompetitionFunction.rational(), h1)
    sp2 = SpeciesParams(0.1, 0.05, 0.2, 1.0, CompetitionFunction.rational(1.0, 1.0, 2.0), h2)
    C = compute_normalization(ModelConfig([sp1, sp2], [[1.0, 0.3], [0.7, 2.0]]))
    o1 = _trapezoid(lambda s: sp1.f(h1(s) + 0.3 * h2(s)), -2.5, 0.0)
    o2 = _trapezoid(lambda s: sp2.f(0.7 * h1(s) + 2.0 * h2(s)), -1.0, 0.0)
    assert C.C == pytest.approx((o1, o2), abs=1e-10)


def test_zero_delay_has_zero_normalization():
    sp = SpeciesParams(0.1, 0.05, 0.2, 0.0)
    assert compute_normalization(ModelConfig([sp], [[1.0]])).C == (0.0,)


def test_f1_equilibrium_closed_form():
    A, tau = equilibrium(F1(), 0, 1.0)
    tau_exact = math.log(2.0) / 0.05
    assert tau == pytest.approx(tau_exact, rel=1e-15)
    # f(A*) tau = 1 with f = 1/(1+x) gives A* = tau - 1
    assert A == pytest.approx(tau_exact - 1.0, rel=1e-14)
    assert abs(0.2 * math.exp(-0.05 * tau) - 0.1) < 1e-10
    assert abs(tau / (1 + A) - 1.0) < 1e-10


def test_equilibrium_absent_or_unsupported():
    sub = ModelConfig([SpeciesParams(0.3, 0.05, 0.2, 2.0)], [[1.0]])
    assert equilibrium(sub, 0, 1.0) is None
    const = ModelConfig([SpeciesParams(0.1, 0.05, 0.2, 2.0, CompetitionFunction.constant())], [[1.0]])
    assert equilibrium(const, 0, 2.0) is None
    with pytest.raises(UnsupportedError):
        equilibrium(F3(), 0, 0.8)


def test_config_rejects_zero_self_competition():
    with pytest.raises(ValidationError, match="self-competition"):
        ModelConfig([f1_species(), f1_species()], [[1.0, 0.5], [0.5, 0.0]])


def test_config_rejects_coupled_exponential():
    sp = SpeciesParams(0.1, 0.05, 0.2, 2.0, CompetitionFunction.exponential())
    with pytest.raises(ValidationError, match="growth-ratio bound"):
        ModelConfig([sp, f1_species()], [[1.0, 0.5], [0.0, 1.0]])
    ModelConfig([sp, f1_species()], [[1.0, 0.0], [0.0, 1.0]])  # uncoupled is fine


@pytest.mark.parametrize("field, value", [("mu_A", 0.0), ("mu_J", -1.0), ("beta", math.nan),
                                          ("tau0", -0.5)])
def test_config_rejects_bad_rates(field, value):
    kw = dict(mu_A=0.1, mu_J=0.05, beta=0.2, tau0=2.0)
    kw[field] = value
    with pytest.raises(ValidationError):
        ModelConfig([SpeciesParams(**kw)], [[1.0]])


def test_config_rejects_bad_histories():
    neg = InitialHistory.linear(0.5, 1.0)  # negative before s = -0.5
    with pytest.raises(ValidationError, match=">= 0"):
        ModelConfig([f1_species(history=neg)], [[1.0]])
    short = InitialHistory.sampled([-1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValidationError, match="must cover"):
        ModelConfig([f1_species(history=short)], [[1.0]])


def test_coupled_lookback_requires_longer_history():
    # species 2 is read back to -4 through species 1's delay
    short = InitialHistory.sampled([-2.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValidationError, match="must cover"):
        ModelConfig([f1_species(tau0=4.0), f1_species(tau0=2.0, history=short)],
                    [[1.0, 0.5], [0.0, 1.0]])


def test_sampled_history_domain():
    h = InitialHistory.sampled([-2.0, 0.0], [1.0, 3.0])
    assert float(h(-1.0)) == 2.0
    with pytest.raises(DomainError):
        h(-2.5)
    with pytest.raises(ValidationError):
        InitialHistory.sampled([0.0, -1.0], [1.0, 1.0])


def test_zeta_shape_validated():
    with pytest.raises(ValidationError):
        ModelConfig([f1_species()], [[1.0, 0.0]])
    with pytest.raises(ValidationError, match="coupling weights"):
        ModelConfig([f1_species(), f1_species()], [[1.0, -0.1], [0.0, 1.0]])
