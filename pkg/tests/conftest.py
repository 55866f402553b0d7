import numpy as np
import pytest

from johncentroid.geom import HPolytope

ACCEPTANCE_LINES: list[str] = []


def cube(n: int, half: float = 1.0) -> HPolytope:
    return HPolytope(np.vstack([np.eye(n), -np.eye(n)]), np.full(2 * n, half), name=f"cube_{n}")


@pytest.fixture
def cube4():
    return cube(4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
