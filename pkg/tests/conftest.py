import numpy as np
import pytest

from rischannel.fields import PlaneWave, rcs_pattern
from rischannel.metasurface import mirror_design, reference_design

F0 = 304e9
GRID = np.linspace(-90.0, 90.0, 3601)  # 0.05 deg


@pytest.fixture(scope="session")
def design():
    return reference_design()


@pytest.fixture(scope="session")
def mirror():
    return mirror_design()


@pytest.fixture(scope="session")
def normal_wave(design):
    return PlaneWave.incident_on(design, F0)


@pytest.fixture(scope="session")
def pattern(design, normal_wave):
    return rcs_pattern(design, normal_wave, GRID)


@pytest.fixture(scope="session")
def pattern_at(design):
    cache = {}

    def get(f):
        if f not in cache:
            cache[f] = rcs_pattern(design, PlaneWave.incident_on(design, f), GRID)
        return cache[f]

    return get


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
