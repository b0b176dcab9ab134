import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ksafe.grid import TorusGrid, random_field

settings.register_profile(
    "ksafe", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ksafe")

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid256():
    return TorusGrid(1, 256)


@pytest.fixture
def field_factory(rng):
    def make(grid, q=1, band=None, decay=0.0, real=True):
        return random_field(grid, rng, q=q, band=band, decay=decay, real=real)

    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda t: int(t.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
