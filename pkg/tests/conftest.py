import numpy as np
import pytest

from moisture_fvm.coefficients import get_coefficients
from moisture_fvm.fvm import SemiDiscreteProblem
from moisture_fvm.grid import UniformGrid, project_cell_averages
from moisture_fvm.mollifier import zero_pressure


def heat_problem(n, T=0.1):
    grid = UniformGrid(n)
    v0 = project_cell_averages(lambda x: np.cos(np.pi * x), grid)
    return SemiDiscreteProblem(get_coefficients("identity"), grid, zero_pressure(T), v0, T)


def heat_exact(traj):
    grid = traj.grid
    v0 = project_cell_averages(lambda x: np.cos(np.pi * x), grid).values
    return np.exp(-np.pi**2 * traj.times)[:, None] * v0[None, :]


@pytest.fixture
def make_heat():
    return heat_problem


def pytest_terminal_summary(terminalreporter):
    # one line per acceptance criterion, recorded by tests/test_acceptance.py
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
