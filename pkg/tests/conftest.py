import numpy as np
import pytest

from commute.potentials import free

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(label, passed, detail)``."""

    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def z_grid():
    s = np.linspace(-2.0, 2.0, 5)
    t = np.linspace(0.5, 4.0, 5)
    return (s[:, None] + 1j * t[None, :]).ravel()


@pytest.fixture
def q_free():
    return free()
