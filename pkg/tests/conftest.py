import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: (int(s.split()[1].rstrip('abc')), s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL/SKIP line per criterion; shown in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def log(number, status, text):
        line = f"[{status}] {number:>3} {text}"
        print(line)
        lines.append(line)

    return log


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
