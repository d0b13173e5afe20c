import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).resolve().parent))

from winetrace.tamper import consistent_fixture  # noqa: E402

settings.register_profile(
    "winetrace",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("winetrace")

# one line per acceptance criterion, filled in by test_acceptance.py
VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def fixture_seed0():
    """Shared consistent validation fixture. Tests must not mutate it."""
    return consistent_fixture(0)


@pytest.fixture(scope="session")
def verdicts():
    return VERDICTS


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
