import numpy as np
import pytest
from hypothesis import settings

from bgkbaro import make_regime

settings.register_profile("bgkbaro", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("bgkbaro")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ind1():
    return make_regime(1, 3.0)


@pytest.fixture(scope="session")
def ind2():
    return make_regime(2, 2.0)


@pytest.fixture(scope="session")
def pp1():
    return make_regime(1, 5.0 / 3.0)


@pytest.fixture(scope="session")
def pp2():
    return make_regime(2, 1.5)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Print one PASS/FAIL line per criterion and keep it for the terminal summary."""
    def log(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
