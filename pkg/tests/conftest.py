import numpy as np
import pytest
from hypothesis import settings

from burgers_alpha.core import ControlWindow, Grid1D, ScalarField

settings.register_profile("desk", max_examples=40, deadline=None)
settings.load_profile("desk")


@pytest.fixture
def unit_grid():
    return Grid1D(1.0, 1.0, 63, 200)


@pytest.fixture
def small_sine(unit_grid):
    return ScalarField.from_function(unit_grid, lambda x: 0.1 * np.sin(np.pi * x))


@pytest.fixture
def window():
    return ControlWindow(0.3, 0.7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_random(grid, rng, modes=6, amp=1.0):
    """Random combination of the first sine modes with decaying coefficients."""
    k = np.arange(1, modes + 1)
    c = rng.standard_normal(modes) / k**2
    vals = np.sin(np.outer(grid.x, k) * np.pi / grid.L) @ c
    return amp * vals / max(np.max(np.abs(vals)), 1e-300)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
