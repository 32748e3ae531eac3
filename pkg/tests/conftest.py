import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from qrule import potential as P
from qrule import solve as S

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("qrule", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qrule")

DSW_ARGS = (-2.0, -1.0, 1.0, 2.0, 100.0, 100.0, 101.0)
BIH_ARGS = (2.0, 3.0, 5.0)


@pytest.fixture(scope="session")
def dsw():
    return P.double_square_well(*DSW_ARGS)


@pytest.fixture(scope="session")
def bih():
    return P.biharmonic(*BIH_ARGS)


@pytest.fixture(scope="session")
def harm():
    return P.harmonic()


@pytest.fixture(scope="session")
def dsw_levels(dsw):
    return S.solve_shooting(dsw, S.EnergyWindow(0.0, 100.0))


@pytest.fixture(scope="session")
def bih_levels(bih):
    return S.solve_shooting(bih, S.EnergyWindow(-5.0, 9.0))


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdicts, one line per criterion."""
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
