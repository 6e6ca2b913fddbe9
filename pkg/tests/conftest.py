from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from rmtorus import unit_system

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("repo")

D_VALUES = (2, 3, 5, 13)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", params=D_VALUES, ids=lambda d: f"d{d}")
def us(request):
    return unit_system(request.param)


@pytest.fixture(scope="session")
def us5():
    return unit_system(5)


@pytest.fixture(scope="session")
def solv_pair(us5):
    """Solv Harper spectra at R=8 and R=12 (Kc=1), shared across modules."""
    from rmtorus.harper import solv_spectrum

    return solv_spectrum(us5, R=8, Kc=1), solv_spectrum(us5, R=12, Kc=1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
