"""Uniform cell grids on (0, 1), cell averages, step reconstruction and discrete norms."""

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .validation import check_finite_array, check_positive_int, frozen


@dataclass(frozen=True)
class UniformGrid:
    """``n`` equal cells ``[(i-1)/n, i/n)`` of the unit interval."""

    n: int

    def __post_init__(self):
        check_positive_int(self.n, "n", minimum=2)

    @property
    def dx(self):
        return 1.0 / self.n

    @cached_property
    def edges(self):
        return frozen(np.arange(self.n + 1) / self.n)

    @cached_property
    def centers(self):
        return frozen((np.arange(self.n) + 0.5) / self.n)

    def quadrature_nodes(self, quad_points=8):
        """Gauss-Legendre nodes in every cell and the matching weights.

        Returns ``(x, w)`` of shape ``(n, quad_points)`` with weights summing to
        ``dx`` on each cell.
        """
        check_positive_int(quad_points, "quad_points")
        u, w = np.polynomial.legendre.leggauss(quad_points)
        x = self.edges[:-1, None] + 0.5 * self.dx * (u[None, :] + 1.0)
        return x, np.broadcast_to(0.5 * self.dx * w, x.shape)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """One value per cell of ``grid``: the step function built from cell averages."""

    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        vals = check_finite_array(self.values, "values", ndim=1, length=self.grid.n)
        object.__setattr__(self, "values", frozen(vals))

    def __len__(self):
        return self.grid.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __call__(self, x):
        return reconstruct(self, x)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """A trajectory of grid functions on a strictly increasing time grid.

    ``values[k]`` is the frame at ``times[k]``. ``runlog`` optionally carries
    per-step solver diagnostics.
    """

    grid: UniformGrid
    times: np.ndarray
    values: np.ndarray
    runlog: tuple = field(default=(), compare=False)

    def __post_init__(self):
        times = check_finite_array(self.times, "times", ndim=1)
        vals = check_finite_array(self.values, "values", ndim=2)
        if vals.shape != (times.size, self.grid.n):
            raise ValueError(f"values must have shape {(times.size, self.grid.n)}, got {vals.shape}")
        if times.size and times[0] != 0.0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", frozen(times))
        object.__setattr__(self, "values", frozen(vals))
        object.__setattr__(self, "runlog", tuple(self.runlog))

    @property
    def horizon(self):
        return float(self.times[-1])

    def __len__(self):
        return self.times.size

    def frame(self, k):
        return GridFunction(self.grid, self.values[k])

    @property
    def frames(self):
        return [self.frame(k) for k in range(len(self))]

    def map(self, fn):
        """Apply ``fn`` to every value, keeping the grid and time axis."""
        return SpaceTimeField(self.grid, self.times, fn(self.values))


def project_cell_averages(f, grid, quad_points=8):
    """Cell averages of ``f`` by ``quad_points``-node Gauss-Legendre per cell."""
    x, w = grid.quadrature_nodes(quad_points)
    vals = np.asarray(f(x), dtype=float) * np.ones_like(x)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise ValueError(f"f is not finite at x = {x[bad][0]!r}")
    return GridFunction(grid, (vals * w).sum(axis=1) / grid.dx)


def cell_index(grid, x):
    """Index of the half-open cell containing ``x``; ``x = 1`` maps to the last cell."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)) or not np.all(np.isfinite(x)):
        raise ValueError("x must lie in [0, 1]")
    return np.minimum((x * grid.n).astype(int), grid.n - 1)


def reconstruct(gf, x):
    """Evaluate the step function of ``gf`` at ``x`` (scalar or array)."""
    idx = cell_index(gf.grid, x)
    out = gf.values[idx]
    return float(out) if np.ndim(out) == 0 else out


def divided_difference(gf):
    """Backward difference quotient: zero on the first cell, ``(v_i - v_{i-1})/dx`` after."""
    vals = np.zeros(gf.grid.n)
    vals[1:] = np.diff(gf.values) / gf.grid.dx
    return GridFunction(gf.grid, vals)


def divided_difference_values(values, dx):
    """Row-wise backward difference quotients of a ``(frames, n)`` array."""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    out[..., 1:] = np.diff(values, axis=-1) / dx
    return out


def norms(gf):
    """``(l2, linf)`` of the step function; both exact for piecewise constants."""
    v = gf.values
    return float(np.sqrt(gf.grid.dx * np.dot(v, v))), float(np.max(np.abs(v)))


def trapezoid_in_time(times, samples):
    """Trapezoid rule along the first axis of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] < 2:
        return np.zeros(samples.shape[1:]) if samples.ndim > 1 else 0.0
    return np.trapezoid(samples, times, axis=0)


def spacetime_l2(field_):
    """``L^2(0, T; L^2)`` norm: exact in space, trapezoid on the stored times."""
    sq = field_.grid.dx * np.sum(field_.values**2, axis=1)
    return float(np.sqrt(trapezoid_in_time(field_.times, sq)))


def refine_values(values, factor):
    """Repeat cell values so a coarse step function lives on a ``factor``-times finer grid."""
    return np.repeat(np.asarray(values), factor, axis=-1)


def _fmt(x):
    return repr(float(x))


def grid_function_to_csv(gf, path=None):
    """CSV rows ``cell_index,x_left,x_right,value`` (1-based cell index)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cell_index", "x_left", "x_right", "value"])
    edges = gf.grid.edges
    for i, v in enumerate(gf.values):
        writer.writerow([i + 1, _fmt(edges[i]), _fmt(edges[i + 1]), _fmt(v)])
    return _finish(buf, path)


def grid_function_from_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    rows.sort(key=lambda r: int(r["cell_index"]))
    return GridFunction(UniformGrid(len(rows)), [float(r["value"]) for r in rows])


def spacetime_to_csv(field_, path=None):
    """Long-format CSV rows ``t,cell_index,value``, time-major."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "cell_index", "value"])
    for t, row in zip(field_.times, field_.values):
        ts = _fmt(t)
        writer.writerows([ts, i + 1, _fmt(v)] for i, v in enumerate(row))
    return _finish(buf, path)


def spacetime_from_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    times = sorted({float(r["t"]) for r in rows})
    n = max(int(r["cell_index"]) for r in rows)
    tindex = {t: k for k, t in enumerate(times)}
    vals = np.full((len(times), n), np.nan)
    for r in rows:
        vals[tindex[float(r["t"])], int(r["cell_index"]) - 1] = float(r["value"])
    return SpaceTimeField(UniformGrid(n), np.array(times), vals)


def _finish(buf, path):
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
