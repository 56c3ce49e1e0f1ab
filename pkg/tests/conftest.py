import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chiralsync.network import motif

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GAMMA = 0.05
PUMP = 0.9 * GAMMA
UNIT = GAMMA - PUMP


@pytest.fixture
def driven_dimer():
    return motif("dimer", [1.0, 1.9], [PUMP, 0.0], GAMMA)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` logs one acceptance line and returns ``ok``."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
