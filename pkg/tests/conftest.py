import numpy as np
import pytest

from mep_lab.spectral import Grid

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(label: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} {label}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def g64():
    return Grid(1, 64)


@pytest.fixture
def g128():
    return Grid(1, 128)
