"""Finite-volume scheme for ``d/dt h(v) = d/dx (dv/dx + b(v) p)`` with zero-flux ends.

The interface flux between cells ``i`` and ``i+1`` is

    F_i = (v_{i+1} - v_i) / dx + b((v_i + v_{i+1}) / 2) * p_i

with ``p_i`` the pressure average of the left cell. Time stepping is backward
Euler applied to ``h(v)`` (so ``sum(dx * h(v))`` is conserved up to the Newton
tolerance) and each step is solved by Newton's method with a tridiagonal
Jacobian.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .coefficients import CoefficientSet
from .grid import GridFunction, SpaceTimeField, UniformGrid
from .mollifier import CellAverageSampler, PressureField
from .validation import StepFailure, check_positive, check_positive_int

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TimeStepConfig:
    """Time step and Newton controls.

    Parameters
    ----------
    dt : float
        Nominal step; the last step is shortened to land on ``T``.
    newton_tol : float
        Max-norm tolerance on the residual ``(h(v) - h(v_old))/dt - div F``.
    newton_max_iter : int
        Newton iteration cap per attempt.
    max_halvings : int
        How many times a failing step may be retried with half the step.
    conservative : bool
        Step ``h(v)`` directly (default) or the form ``h'(v) dv/dt``.
    """

    dt: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    max_halvings: int = 10
    conservative: bool = True

    def __post_init__(self):
        check_positive(self.dt, "dt")
        check_positive(self.newton_tol, "newton_tol")
        check_positive_int(self.newton_max_iter, "newton_max_iter")
        check_positive_int(self.max_halvings, "max_halvings", minimum=0)


@dataclass(frozen=True, eq=False)
class SemiDiscreteProblem:
    """Coefficients, grid, pressure field, initial cell averages and horizon."""

    coeffs: CoefficientSet
    grid: UniformGrid
    pressure: PressureField
    initial: GridFunction
    horizon: float
    quad_points: int = 4
    _sampler: object = field(default=None, repr=False)

    def __post_init__(self):
        check_positive(self.horizon, "horizon")
        if self.initial.grid != self.grid:
            raise ValueError("initial data lives on a different grid")
        if self.pressure.horizon < self.horizon * (1 - 1e-12):
            raise ValueError("pressure horizon is shorter than the problem horizon")
        object.__setattr__(self, "_sampler", CellAverageSampler(self.pressure, self.grid, self.quad_points))

    def pressure_cells(self, t):
        """Pressure cell averages at time ``t``."""
        return self._sampler(min(float(t), self.pressure.horizon))

    def mass(self, values):
        return float(self.grid.dx * np.sum(self.coeffs.h(np.asarray(values))))


@dataclass(frozen=True)
class RunLogEntry:
    step: int
    t: float
    dt: float
    newton_iters: int
    mass: float
    mass_drift: float


RUNLOG_FIELDS = ("step", "t", "dt", "newton_iters", "mass", "mass_drift")


def interface_flux(v_left, v_right, p_cell, dx, coeffs):
    """Flux ``(v_right - v_left)/dx + b((v_left + v_right)/2) * p_cell``; vectorized."""
    dx = check_positive(float(dx), "dx")
    v_left, v_right = np.asarray(v_left, dtype=float), np.asarray(v_right, dtype=float)
    out = (v_right - v_left) / dx + coeffs.b(0.5 * (v_left + v_right)) * np.asarray(p_cell, dtype=float)
    return float(out) if out.ndim == 0 else out


def _fluxes(v, p, dx, coeffs):
    """Interior fluxes ``F_1..F_{n-1}`` padded with the zero boundary fluxes."""
    F = np.zeros(v.size + 1)
    F[1:-1] = (v[1:] - v[:-1]) / dx + coeffs.b(0.5 * (v[:-1] + v[1:])) * p[:-1]
    return F


def _divergence(v, p, dx, coeffs):
    return np.diff(_fluxes(v, p, dx, coeffs)) / dx


def semi_discrete_rhs(state, pressure_cells, problem):
    """Time derivative of the cell values: flux differences divided by ``h'(v_i)``."""
    v = np.asarray(state.values if isinstance(state, GridFunction) else state, dtype=float)
    p = np.asarray(pressure_cells.values if isinstance(pressure_cells, GridFunction) else pressure_cells, dtype=float)
    div = _divergence(v, p, problem.grid.dx, problem.coeffs)
    return GridFunction(problem.grid, div / problem.coeffs.dh(v))


def _residual(v, v_old, h_old, p, dt, dx, coeffs, conservative):
    div = _divergence(v, p, dx, coeffs)
    if conservative:
        return (coeffs.h(v) - h_old) / dt - div
    return coeffs.dh(v) * (v - v_old) / dt - div


def _jacobian_bands(v, v_old, p, dt, dx, coeffs, conservative):
    """Banded Jacobian of the residual in ``solve_banded`` (1, 1) layout."""
    n = v.size
    m = 0.5 * (v[:-1] + v[1:])
    half_bp = 0.5 * coeffs.db(m) * p[:-1]
    dF_left = -1.0 / dx + half_bp  # dF_i / dv_i
    dF_right = 1.0 / dx + half_bp  # dF_i / dv_{i+1}
    ab = np.zeros((3, n))
    if conservative:
        ab[1] = coeffs.dh(v) / dt
    else:
        ab[1] = (coeffs.dh(v) + coeffs.d2h(v) * (v - v_old)) / dt
    ab[1, :-1] -= dF_left / dx
    ab[1, 1:] += dF_right / dx
    ab[0, 1:] = -dF_right / dx
    ab[2, :-1] = dF_left / dx
    return ab


def _newton(v_old, p, dt, problem, cfg):
    """One backward-Euler step; returns ``(v_new, iterations)`` or raises StepFailure."""
    coeffs, dx = problem.coeffs, problem.grid.dx
    h_old = coeffs.h(v_old)
    v = v_old.copy()
    res = _residual(v, v_old, h_old, p, dt, dx, coeffs, cfg.conservative)
    rnorm = float(np.max(np.abs(res)))
    history = [rnorm]
    growth = 0
    for it in range(1, cfg.newton_max_iter + 1):
        if rnorm <= cfg.newton_tol:
            return v, it - 1
        ab = _jacobian_bands(v, v_old, p, dt, dx, coeffs, cfg.conservative)
        step = solve_banded((1, 1), ab, -res, check_finite=False)
        v = v + step
        if not np.all(np.isfinite(v)):
            raise StepFailure("Newton produced a non-finite iterate", dt=dt, residual=rnorm, history=history)
        res = _residual(v, v_old, h_old, p, dt, dx, coeffs, cfg.conservative)
        new_norm = float(np.max(np.abs(res)))
        growth = growth + 1 if new_norm > rnorm else 0
        rnorm = new_norm
        history.append(rnorm)
        # updates at rounding level: the residual cannot be reduced further
        if np.max(np.abs(step)) <= 8 * _EPS * (1.0 + np.max(np.abs(v))):
            return v, it
        if growth >= 5:
            raise StepFailure("Newton residual grew for 5 consecutive iterations", dt=dt, residual=rnorm, history=history)
    if rnorm <= cfg.newton_tol:
        return v, cfg.newton_max_iter
    raise StepFailure(
        f"Newton did not converge in {cfg.newton_max_iter} iterations", dt=dt, residual=rnorm, history=history
    )


def step_implicit(state, t, cfg, problem):
    """Advance ``state`` from ``t`` to ``t + cfg.dt`` with one backward-Euler step.

    Pressure cell averages are taken at the end of the step. Raises
    :class:`StepFailure` if Newton fails; no step halving happens here.
    """
    t_new = t + cfg.dt
    if t_new > problem.horizon * (1 + 1e-12):
        raise ValueError("step would pass the horizon")
    v_old = np.asarray(state.values if isinstance(state, GridFunction) else state, dtype=float)
    try:
        v, _ = _newton(v_old, problem.pressure_cells(t_new), cfg.dt, problem, cfg)
    except StepFailure as exc:
        exc.t = t
        raise
    return GridFunction(problem.grid, v)


def _advance(v, t, t_new, problem, cfg):
    """March from ``t`` to ``t_new``, halving the sub-step on Newton failure."""
    for level in range(cfg.max_halvings + 1):
        sub = 2**level
        dt = (t_new - t) / sub
        try:
            w, iters = v, 0
            for k in range(sub):
                t_end = t_new if k == sub - 1 else t + (k + 1) * dt
                w, it = _newton(w, problem.pressure_cells(t_end), dt, problem, cfg)
                iters += it
            return w, dt, iters
        except StepFailure as exc:
            last = exc
    last.t = t
    raise StepFailure(
        f"step at t={t:.6g} failed after {cfg.max_halvings} halvings: {last}",
        t=t,
        dt=last.dt,
        residual=last.residual,
        history=last.history,
    )


def solve(problem, cfg):
    """March from 0 to the horizon and return every frame with a run log."""
    T = problem.horizon
    nsteps = max(1, int(np.ceil(T / cfg.dt * (1 - 1e-12))))
    times = np.minimum(np.arange(nsteps + 1) * cfg.dt, T)
    times[-1] = T
    frames = np.empty((nsteps + 1, problem.grid.n))
    frames[0] = problem.initial.values
    mass0 = problem.mass(frames[0])
    log = [RunLogEntry(0, 0.0, 0.0, 0, mass0, 0.0)]
    v = frames[0].copy()
    for k in range(1, nsteps + 1):
        v, dt_used, iters = _advance(v, times[k - 1], times[k], problem, cfg)
        frames[k] = v
        mass = problem.mass(v)
        log.append(RunLogEntry(k, float(times[k]), float(dt_used), iters, mass, mass - mass0))
    return SpaceTimeField(problem.grid, times, frames, runlog=log)


def max_mass_drift(traj):
    return max(abs(e.mass_drift) for e in traj.runlog)


def runlog_to_csv(runlog, path=None):
    """CSV ``step,t,dt,newton_iters,mass,mass_drift``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUNLOG_FIELDS)
    for e in runlog:
        writer.writerow([e.step, repr(e.t), repr(e.dt), e.newton_iters, repr(e.mass), repr(e.mass_drift)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
