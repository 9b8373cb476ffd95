import numpy as np
import pytest

from ptsingular.basis import BasisTruncation
from ptsingular.potential import parse_potential

_ACCEPTANCE_LINES = []


@pytest.fixture
def cubic():
    return parse_potential("x1^3", 1)


@pytest.fixture
def quintic():
    return parse_potential("x1^5", 1)


@pytest.fixture
def henon_heiles():
    return parse_potential("x1^2*x2", 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""

    def record(number, description, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        line = f"[criterion {number:>2}] {status}  {description}"
        if detail:
            line += f"  |  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def truncation(d, L):
    return BasisTruncation(d, L)
