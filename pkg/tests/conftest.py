import math

import numpy as np
import pytest

from ostrovsky.evolution import random_band_limited
from ostrovsky.grid import Field, make_grid

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid():
    return make_grid(math.pi, 64)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def random_field(grid, seed, kmax=None, amplitude=1.0):
    return Field(grid, random_band_limited(grid, seed, kmax=kmax, amplitude=amplitude))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
