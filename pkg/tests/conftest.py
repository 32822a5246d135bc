import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from astars_nav.constants import ASTARS_POSITION, INDOOR_RECEIVER, URBAN_RECEIVER

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def centroid():
    return np.array(ASTARS_POSITION)


@pytest.fixture
def urban():
    return np.array(URBAN_RECEIVER)


@pytest.fixture
def indoor():
    return np.array(INDOOR_RECEIVER)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one verdict line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_ACCEPTANCE]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
