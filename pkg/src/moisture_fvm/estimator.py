"""Scikit-learn style wrapper around the finite-volume solver."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .coefficients import get_coefficients
from .fvm import SemiDiscreteProblem, TimeStepConfig, solve
from .grid import GridFunction, UniformGrid, cell_index
from .mollifier import get_pressure, mollify


class MoistureFVM(BaseEstimator):
    """Solve from given initial cell averages and interpolate the trajectory.

    Parameters
    ----------
    coefficients : str
        Registered coefficient set.
    pressure : str
        Registered pressure fixture.
    horizon : float
    delta : float or None
        Mollifier radius for the pressure; ``None`` uses it unsmoothed.
    dt_factor : float
        Time step ``dt_factor * dx**2``.
    newton_tol : float
    mollifier_mode : {"radial", "tensor"}

    Attributes
    ----------
    trajectory_ : SpaceTimeField
    grid_ : UniformGrid
    n_cells_ : int
    """

    def __init__(
        self,
        coefficients="sinusoidal",
        pressure="zero",
        horizon=0.1,
        delta=None,
        dt_factor=1.0,
        newton_tol=1e-10,
        mollifier_mode="radial",
    ):
        self.coefficients = coefficients
        self.pressure = pressure
        self.horizon = horizon
        self.delta = delta
        self.dt_factor = dt_factor
        self.newton_tol = newton_tol
        self.mollifier_mode = mollifier_mode

    def fit(self, X, y=None):
        """Solve with ``X`` as the initial cell averages (length = number of cells)."""
        v0 = check_array(X, ensure_2d=False, dtype=float).ravel()
        grid = UniformGrid(v0.size)
        p = get_pressure(self.pressure, T=self.horizon)
        if self.delta is not None and p.sup_abs > 0:
            p = mollify(p, self.delta, mode=self.mollifier_mode)
        problem = SemiDiscreteProblem(get_coefficients(self.coefficients), grid, p, GridFunction(grid, v0), self.horizon)
        self.trajectory_ = solve(problem, TimeStepConfig(dt=self.dt_factor * grid.dx**2, newton_tol=self.newton_tol))
        self.grid_ = grid
        self.n_cells_ = grid.n
        return self

    def predict(self, X):
        """Values at ``(t, x)`` rows: linear in time between frames, cellwise constant in space."""
        check_is_fitted(self, "trajectory_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("predict expects rows (t, x)")
        t, x = X[:, 0], X[:, 1]
        traj = self.trajectory_
        if np.any((t < 0) | (t > traj.horizon) | (x < 0) | (x > 1)):
            raise ValueError("points must lie in [0, T] x [0, 1]")
        idx = cell_index(self.grid_, x)
        k = np.clip(np.searchsorted(traj.times, t, side="right") - 1, 0, len(traj) - 2)
        t0, t1 = traj.times[k], traj.times[k + 1]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * traj.values[k, idx] + w * traj.values[k + 1, idx]
