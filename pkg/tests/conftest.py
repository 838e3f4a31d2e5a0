import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from crossattract.fields import DensityField  # noqa: E402
from crossattract.grid import build_grid  # noqa: E402


@pytest.fixture
def grid3():
    return build_grid(3, 8.0, 512)


def random_field(grid, rng, bumps=3):
    """Smooth nonnegative sum of random Gaussian bumps (radial shells)."""
    r = grid.centers
    vals = np.zeros_like(r)
    for _ in range(bumps):
        c = rng.uniform(0.0, 0.5 * grid.r_max)
        s = rng.uniform(0.3, 1.5)
        vals += rng.uniform(0.1, 2.0) * np.exp(-(((r - c) / s) ** 2))
    return DensityField(grid, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# lines appended by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
