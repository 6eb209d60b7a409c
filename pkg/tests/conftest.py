import pytest
from hypothesis import HealthCheck, settings

from forestdde.fixtures import F1, F3
from forestdde.integrator import IntegratorSettings, solve

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def f1_run():
    """F1 to t=50 at h=0.01, shared by the read-only trajectory tests."""
    return solve(F1(), IntegratorSettings(h=0.01, t_end=50.0))


@pytest.fixture(scope="session")
def f3_run():
    return solve(F3(), IntegratorSettings(h=0.01, t_end=50.0))
