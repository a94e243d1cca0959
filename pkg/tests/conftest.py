import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Every property test runs 200 randomized cases.
settings.register_profile(
    "gait",
    max_examples=200,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "gait"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

# One "PASS|FAIL [n] ..." line per acceptance criterion, repeated in the summary.
ACCEPTANCE_LINES = []


def pytest_collection_modifyitems(items):
    for item in items:
        if getattr(getattr(item, "obj", None), "is_hypothesis_test", False):
            item.add_marker(pytest.mark.property)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def calib():
    from gaitstereo.calibration import default_calibration

    return default_calibration()
