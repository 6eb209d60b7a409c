import pytest

from forestdde.errors import ValidationError
from forestdde.fixtures import F1, F3
from forestdde.integrator import IntegratorSettings
from forestdde.suites import SUITES, check_conservation, check_smith, parse_suites, run_suites


def test_conservation_ratio_measured_above_floor():
    rep = check_conservation(F1(), h=0.04, t_end=30.0, reanchor_every=100)
    ratio = next(c for c in rep.checks if c.name == "conservation.halving_ratio")
    assert ratio.passed and ratio.metric >= 8.0
    assert "roundoff floor" in ratio.detail and "is at the roundoff floor" not in ratio.detail


def test_conservation_floor_exemption_is_explicit():
    strict = check_conservation(F1(), h=0.01, t_end=30.0, floor_exempt=False)
    lenient = check_conservation(F1(), h=0.01, t_end=30.0)
    s = next(c for c in strict.checks if c.name == "conservation.halving_ratio")
    l = next(c for c in lenient.checks if c.name == "conservation.halving_ratio")
    assert s.metric == l.metric < 8.0
    assert not s.passed and l.passed
    assert "at the roundoff floor" in l.detail
    floor = lenient.metadata["conservation"]["roundoff_floor"]
    assert lenient.metadata["conservation"]["residuals"][1] <= floor


def test_parse_suites():
    assert parse_suites("all") == list(SUITES)
    assert parse_suites("lag, pde") == ["lag", "pde"]
    with pytest.raises(ValidationError):
        parse_suites("lag,nonsense")
    with pytest.raises(ValidationError):
        parse_suites(" , ")


def test_smith_skipped_for_two_species():
    rep = check_smith(F3())
    assert rep.checks == [] and "smith" in rep.metadata["skipped"]


def test_run_suites_metadata():
    rep = run_suites(F1(), ["degenerate", "certificates"], IntegratorSettings(h=0.05, t_end=10.0))
    assert rep.passed
    assert rep.metadata["suites"] == ["degenerate", "certificates"]
    assert len(rep.metadata["config_hash"]) == 16
    assert {c.name.split(".")[0] for c in rep.checks} == {"degenerate", "certificates"}
