"""Weak-form residual of an approximate trajectory against smooth test functions.

For a test function ``eta`` with ``eta(T, .) = 0`` the residual is

    - int int h(v) d_t eta + int int (v~ + b(v) p) d_x eta - int h(v(0)) eta(0, .)

where ``v~`` is the backward divided difference of the cell values. It vanishes
for weak solutions and shrinks as a consistent scheme is refined.
"""

from dataclasses import dataclass

import numpy as np

from .fvm import TimeStepConfig, solve
from .grid import divided_difference_values
from .mollifier import CellAverageSampler, PressureField
from .tables import ConvergenceTable, adjacent_ratios
from .validation import NumericalFailure, check_positive, check_positive_int


@dataclass(frozen=True)
class TestFunction:
    """Space-time test function with closed-form partial derivatives."""

    __test__ = False  # not a pytest class

    eval: object
    dt_eval: object
    dx_eval: object
    label: str

    def __add__(self, other):
        return TestFunction(
            lambda t, x: self.eval(t, x) + other.eval(t, x),
            lambda t, x: self.dt_eval(t, x) + other.dt_eval(t, x),
            lambda t, x: self.dx_eval(t, x) + other.dx_eval(t, x),
            f"{self.label}+{other.label}",
        )

    def __mul__(self, scalar):
        s = float(scalar)
        return TestFunction(
            lambda t, x: s * self.eval(t, x),
            lambda t, x: s * self.dt_eval(t, x),
            lambda t, x: s * self.dx_eval(t, x),
            f"{s:g}*{self.label}",
        )

    __rmul__ = __mul__


def cosine_mode(T, k, power=1):
    """``(1 - t/T)**power * cos(k pi x)``."""
    T = check_positive(T, "T")
    w = k * np.pi

    def decay(t):
        return (1.0 - np.asarray(t) / T) ** power

    def decay_dt(t):
        return -power / T * (1.0 - np.asarray(t) / T) ** (power - 1)

    return TestFunction(
        lambda t, x: decay(t) * np.cos(w * np.asarray(x)),
        lambda t, x: decay_dt(t) * np.cos(w * np.asarray(x)),
        lambda t, x: -w * decay(t) * np.sin(w * np.asarray(x)),
        f"cos{k}_p{power}",
    )


def default_family(T, k_max=3):
    """Cosine modes ``k = 0..k_max`` with linear and quadratic decay to zero at ``T``."""
    k_max = check_positive_int(k_max, "k_max")
    return [cosine_mode(T, k, p) for p in (1, 2) for k in range(k_max + 1)]


@dataclass(frozen=True)
class ResidualQuadrature:
    """Gauss-Legendre points per cell and the frame chunk size."""

    points_per_cell: int = 4
    chunk: int = 256


def _pressure_frames(pressure, traj, quad_points):
    if isinstance(pressure, PressureField):
        sampler = CellAverageSampler(pressure, traj.grid, quad_points)
        return np.array([sampler(t) for t in traj.times])
    rho = np.asarray(pressure, dtype=float)
    if rho.shape != traj.values.shape:
        raise ValueError(f"pressure frames have shape {rho.shape}, trajectory {traj.values.shape}")
    return rho


def residual(traj, pressure, coeffs, eta, quad=ResidualQuadrature()):
    """Weak-form residual of ``traj``; see the module docstring.

    Parameters
    ----------
    traj : SpaceTimeField
        At least 8 frames.
    pressure : PressureField or array_like
        Field whose cell averages are taken at each frame time, or those cell
        averages directly with the trajectory's shape.
    coeffs : CoefficientSet
    eta : TestFunction
    quad : ResidualQuadrature

    Returns
    -------
    float
    """
    if len(traj) < 8:
        raise ValueError("residual needs at least 8 frames")
    grid, times = traj.grid, traj.times
    rho = _pressure_frames(pressure, traj, quad.points_per_cell)
    x, w = grid.quadrature_nodes(quad.points_per_cell)
    per_frame = np.empty(len(traj))
    for start in range(0, len(traj), quad.chunk):
        sl = slice(start, start + quad.chunk)
        v, t = traj.values[sl], times[sl, None, None]
        # cell integrals of the test function derivatives
        eta_t = (eta.dt_eval(t, x[None]) * w).sum(axis=2)
        eta_x = (eta.dx_eval(t, x[None]) * w).sum(axis=2)
        flux = divided_difference_values(v, grid.dx) + coeffs.b(v) * rho[sl]
        per_frame[sl] = np.sum(-coeffs.h(v) * eta_t + flux * eta_x, axis=1)
    eta0 = (eta.eval(np.zeros_like(x), x) * w).sum(axis=1)
    total = float(np.trapezoid(per_frame, times)) - float(np.sum(coeffs.h(traj.values[0]) * eta0))
    if not np.isfinite(total):
        raise NumericalFailure(f"non-finite weak residual for {eta.label}")
    return total


def max_residual(traj, pressure, coeffs, family, quad=ResidualQuadrature()):
    """Largest absolute residual over a test family."""
    rho = _pressure_frames(pressure, traj, quad.points_per_cell)
    return max(abs(residual(traj, rho, coeffs, eta, quad)) for eta in family)


RESIDUAL_COLUMNS = ("level", "n", "dt", "max_residual", "ratio")


def residual_sweep(make_problem, n_levels, family=None, dt_factor=1.0, newton_tol=1e-10, quad=ResidualQuadrature()):
    """Solve at each grid size and tabulate the largest family residual.

    Parameters
    ----------
    make_problem : callable
        ``make_problem(n)`` returns a SemiDiscreteProblem on an ``n``-cell grid.
    n_levels : sequence of int
        Strictly increasing cell counts.
    family : list of TestFunction, optional
        Defaults to :func:`default_family` on the problem horizon.
    dt_factor : float
        Time step ``dt_factor * dx**2``.
    """
    n_levels = [check_positive_int(n, "n", minimum=2) for n in n_levels]
    if any(b <= a for a, b in zip(n_levels[:-1], n_levels[1:])):
        raise ValueError("levels must be strictly increasing")
    table = ConvergenceTable(RESIDUAL_COLUMNS)
    values = []
    for level, n in enumerate(n_levels):
        problem = make_problem(n)
        fam = family if family is not None else default_family(problem.horizon)
        dt = dt_factor / n**2
        traj = solve(problem, TimeStepConfig(dt=dt, newton_tol=newton_tol))
        rho = np.array([problem.pressure_cells(t) for t in traj.times])
        values.append(max_residual(traj, rho, problem.coeffs, fam, quad))
        table.add(level=level, n=n, dt=dt, max_residual=values[-1])
    for row, ratio in zip(table.rows, adjacent_ratios(values)):
        row["ratio"] = ratio
    return table
