import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from roominv import CUBE_ABAR, CUBE_DIMS, MICROPHONES, PISTOLS, RoomModel
from roominv.degrade import DegradationConfig, degrade_matrix
from roominv.image_source import simulate_matrix

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cube_room():
    return RoomModel.from_absorptivity(CUBE_DIMS, CUBE_ABAR)


@pytest.fixture(scope="session")
def cube_clean(cube_room):
    """2 x 2 clean simulation of the test cube, full 65536 samples."""
    return simulate_matrix(cube_room, PISTOLS, MICROPHONES)


@pytest.fixture(scope="session")
def cube_proxy(cube_room):
    """2 x 2 degraded proxy plant with the default degradation settings."""
    return degrade_matrix(cube_room, PISTOLS, MICROPHONES, DegradationConfig())


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[number])
