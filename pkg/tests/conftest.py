import numpy as np
import pytest

from repscat.potential import free
from repscat.resolvent import Resolvent
from repscat.scattering import scattering_grid


@pytest.fixture(scope="session")
def free_grid():
    """Default scattering grid for alpha = 1, q = 0, d = 1."""
    return scattering_grid(free(1.0), 2.0)


@pytest.fixture(scope="session")
def free_resolvent(free_grid):
    return Resolvent(free_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one summary line per acceptance criterion."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
