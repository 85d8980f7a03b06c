import os

import pytest
from hypothesis import HealthCheck, settings

from resetctl import CgLpController, LinearControllerParams, PlantModel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# linear gain placed by the robust tuner for the reference plant
K_P_ROBUST = 0.13027613868


@pytest.fixture
def model():
    return PlantModel()


@pytest.fixture
def lin():
    return LinearControllerParams(K_P=K_P_ROBUST)


@pytest.fixture
def cglp():
    return CgLpController()


# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
