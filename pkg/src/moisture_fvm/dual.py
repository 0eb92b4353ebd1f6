"""Linear dual problem with difference-quotient coefficients and its Picard solver.

The dual problem is

    d_t zeta - sigma d_xx zeta - phi d_x zeta = xi,   d_x zeta = 0 at x = 0, 1,   zeta(0) = 0,

with ``sigma`` bounded between positive constants. It is solved by Picard
iteration on the auxiliary problem in which ``phi d_x zeta`` is replaced by
``phi d_x zeta_prev`` from the previous iterate. Each auxiliary solve is
backward Euler in time and cell-centered second differences in space, with
Neumann ends imposed by ghost-cell reflection.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import solve_banded

from .coefficients import h_inverse
from .grid import SpaceTimeField, trapezoid_in_time
from .mollifier import PressureField, mollify
from .reports import EstimateReport
from .validation import NumericalFailure, check_positive, check_positive_int


@dataclass(frozen=True, eq=False)
class DualCoefficients:
    """Smoothed coefficients and source of the dual problem.

    Parameters
    ----------
    sigma, phi, xi : PressureField
        Diffusivity, drift coefficient and source on ``[0, T] x [0, 1]``.
    delta_sigma, c_sigma : float
        Declared bounds ``delta_sigma <= sigma <= c_sigma``.
    c_q : float
        Bound on the difference quotient ``q`` that ``phi`` was built from.
    xi_sup : float
        ``max |xi|``.
    sigma_x_sup, sigma_t_sup : float or None
        Sup norms of the partial derivatives of ``sigma``; estimated on a
        lattice when omitted.
    """

    sigma: PressureField
    phi: PressureField
    xi: PressureField
    delta_sigma: float
    c_sigma: float
    c_q: float
    xi_sup: float
    sigma_x_sup: float = None
    sigma_t_sup: float = None
    phi_sup: float = None
    epsilon: float = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        check_positive(self.delta_sigma, "delta_sigma")
        check_positive(self.c_sigma, "c_sigma")
        check_positive(self.c_q, "c_q")
        check_positive(self.xi_sup, "xi_sup", allow_zero=True)
        if self.delta_sigma > self.c_sigma:
            raise ValueError("delta_sigma must not exceed c_sigma")

    @property
    def horizon(self):
        return self.sigma.horizon

    def sample(self, grid, times):
        """``(sigma, phi, xi)`` at cell centers for each time; each ``(len(times), n)``."""
        key = (grid.n, times.size, float(times[-1]), float(times[1] - times[0]) if times.size > 1 else 0.0)
        if key not in self._cache:
            tt, xx = np.meshgrid(times, grid.centers, indexing="ij")
            self._cache[key] = tuple(f.evaluate(tt, xx) for f in (self.sigma, self.phi, self.xi))
        return self._cache[key]

    def derivative_bounds(self, nt=200, nx=400):
        """``(sup |d_x sigma|, sup |d_t sigma|, sup |phi|)`` from declared values or a lattice."""
        if None not in (self.sigma_x_sup, self.sigma_t_sup, self.phi_sup):
            return self.sigma_x_sup, self.sigma_t_sup, self.phi_sup
        T = self.horizon
        t = np.linspace(0.0, T, nt + 1)
        x = np.linspace(0.0, 1.0, nx + 1)
        tt, xx = np.meshgrid(t, x, indexing="ij")
        s = self.sigma.evaluate(tt, xx)
        sx = np.abs(np.diff(s, axis=1)).max() * nx
        st = np.abs(np.diff(s, axis=0)).max() * nt / T
        ph = np.abs(self.phi.evaluate(tt, xx)).max()
        return (
            self.sigma_x_sup if self.sigma_x_sup is not None else float(sx),
            self.sigma_t_sup if self.sigma_t_sup is not None else float(st),
            self.phi_sup if self.phi_sup is not None else float(ph),
        )

    def check_bounds(self, grid, times, slack=1e-12):
        """Reports for ``delta_sigma <= sigma <= c_sigma`` on the solve lattice."""
        s, _, _ = self.sample(grid, times)
        return [
            EstimateReport("sigma_lower", self.delta_sigma, float(s.min()), slack),
            EstimateReport("sigma_upper", float(s.max()), self.c_sigma, slack),
        ]

    def xi_boundary_report(self, distance=1e-3, samples=400):
        """Report ``max |xi|`` on the band within ``distance`` of the cylinder boundary (should be 0)."""
        T = self.horizon
        u = np.linspace(0.0, 1.0, samples)
        band_t = np.concatenate([u * distance * T, T - u * distance * T])
        band_x = np.concatenate([u * distance, 1.0 - u * distance])
        t1, x1 = np.meshgrid(band_t, np.linspace(0, 1, samples), indexing="ij")
        t2, x2 = np.meshgrid(np.linspace(0, T, samples), band_x, indexing="ij")
        worst = max(np.abs(self.xi.evaluate(t1, x1)).max(), np.abs(self.xi.evaluate(t2, x2)).max())
        return EstimateReport("xi_boundary_support", float(worst), 0.0, 1e-14)


@dataclass(frozen=True, eq=False)
class DualState:
    """Converged (or final) dual iterate with its Picard increment history."""

    zeta: SpaceTimeField
    epsilon: float
    picard_history: tuple
    dt: float
    delta_sigma: float
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "picard_history", tuple(float(h) for h in self.picard_history))
        if any(h < 0 for h in self.picard_history):
            raise ValueError("Picard increments must be nonnegative")


@dataclass(frozen=True, eq=False)
class SigmaQFields:
    """Pointwise difference quotients of ``h^{-1}`` and ``b o h^{-1}`` between two states."""

    sigma: SpaceTimeField
    q: SpaceTimeField
    delta_sigma: float
    c_sigma: float
    c_q: float
    reports: tuple


def build_sigma_q(z1, z2, coeffs, floor=1e-12):
    """Difference quotients ``sigma``, ``q`` of two ``z = h(v)`` trajectories.

    Where ``|z1 - z2| <= floor`` both are set to 1. Elsewhere
    ``sigma = (h^{-1}(z1) - h^{-1}(z2)) / (z1 - z2)`` and
    ``q = (b(h^{-1}(z1)) - b(h^{-1}(z2))) / (z1 - z2)``.

    The reports check ``1/C_h <= sigma <= 1/delta_h`` and
    ``|q| <= C_b/delta_h`` on the points where the quotient branch applies.
    The returned ``delta_sigma``/``c_sigma`` also cover the value 1 used on
    the other branch.
    """
    if z1.grid != z2.grid or z1.times.shape != z2.times.shape or np.any(z1.times != z2.times):
        raise ValueError("z1 and z2 must share grid and times")
    floor = check_positive(floor, "floor")
    a, b_ = z1.values, z2.values
    diff = a - b_
    quotient = np.abs(diff) > floor
    r1, r2 = h_inverse(coeffs, a), h_inverse(coeffs, b_)
    safe = np.where(quotient, diff, 1.0)
    sigma = np.where(quotient, (r1 - r2) / safe, 1.0)
    q = np.where(quotient, (coeffs.b(r1) - coeffs.b(r2)) / safe, 1.0)
    lo, hi, cq = 1.0 / coeffs.c_h, 1.0 / coeffs.delta_h, coeffs.c_b / coeffs.delta_h
    if quotient.any():
        s_q, q_q = sigma[quotient], np.abs(q[quotient])
        reports = (
            EstimateReport("sigma_lower", lo, float(s_q.min()), 1e-9),
            EstimateReport("sigma_upper", float(s_q.max()), hi, 1e-9),
            EstimateReport("q_abs_upper", float(q_q.max()), cq, 1e-9),
        )
    else:
        reports = ()
    return SigmaQFields(
        sigma=SpaceTimeField(z1.grid, z1.times, sigma),
        q=SpaceTimeField(z1.grid, z1.times, q),
        delta_sigma=min(lo, 1.0),
        c_sigma=max(hi, 1.0),
        c_q=max(cq, 1.0),
        reports=reports,
    )


def field_from_samples(traj, label, fill_value=0.0, regularity="L4"):
    """Bilinear interpolant of cell-center samples as a PressureField (constant beyond the outer centers)."""
    centers = traj.grid.centers
    interp = RegularGridInterpolator((traj.times, centers), traj.values, method="linear")

    def fn(t, x):
        t = np.clip(t, traj.times[0], traj.times[-1])
        x = np.clip(x, centers[0], centers[-1])
        return interp(np.stack([t, x], axis=-1))

    return PressureField(
        fn=fn,
        horizon=traj.horizon,
        regularity=regularity,
        fill_value=fill_value,
        sup_abs=float(np.abs(traj.values).max()),
        label=label,
    )


def smoothed_dual_coefficients(
    sigma_raw, phi_raw, xi, epsilon, delta_sigma, c_sigma, c_q, xi_sup, quad_points=6, panels=4
):
    """Mollify ``sigma`` (radial kernel, extended by 1) and ``phi`` (tensor kernel, extended by 0).

    The discrete kernel weights are positive and normalized, so ``sigma``
    stays within the range of its raw values and the extension value for any
    quadrature resolution.
    """
    if sigma_raw.fill_value != 1.0 or phi_raw.fill_value != 0.0:
        raise ValueError("sigma must be extended by 1 and phi by 0")
    sigma = mollify(sigma_raw, epsilon, quad_points=quad_points, mode="radial", panels=panels)
    phi = mollify(phi_raw, epsilon, quad_points=quad_points, mode="tensor", panels=panels)
    return DualCoefficients(
        sigma=sigma,
        phi=phi,
        xi=xi,
        delta_sigma=delta_sigma,
        c_sigma=c_sigma,
        c_q=c_q,
        xi_sup=xi_sup,
        phi_sup=phi_raw.sup_abs,
        epsilon=epsilon,
    )


def _time_grid(T, dt):
    steps = max(1, int(math.ceil(T / dt * (1 - 1e-12))))
    times = np.minimum(np.arange(steps + 1) * dt, T)
    times[-1] = T
    return times


def centered_gradient(values, dx):
    """Centered first differences with reflected ghosts (zero at the outer faces)."""
    padded = np.concatenate([values[..., :1], values, values[..., -1:]], axis=-1)
    return (padded[..., 2:] - padded[..., :-2]) / (2.0 * dx)


def second_difference(values, dx):
    """Second differences with reflected ghost cells."""
    padded = np.concatenate([values[..., :1], values, values[..., -1:]], axis=-1)
    return (padded[..., 2:] - 2.0 * values + padded[..., :-2]) / dx**2


def solve_auxiliary(duals, zeta_tilde, grid, dt, xi_scale=1.0):
    """One auxiliary solve with the drift term frozen at ``zeta_tilde``.

    Parameters
    ----------
    duals : DualCoefficients
    zeta_tilde : SpaceTimeField or None
        Previous iterate on ``grid`` with the time lattice of step ``dt``;
        ``None`` means zero.
    grid : UniformGrid
    dt : float
    xi_scale : float
        Multiplier on the source (0 gives the homogeneous problem).

    Returns
    -------
    SpaceTimeField
        Frames at every step, starting from the zero frame.
    """
    dt = check_positive(dt, "dt")
    times = _time_grid(duals.horizon, dt)
    sigma, phi, xi = duals.sample(grid, times)
    if sigma.min() <= 0:
        raise NumericalFailure("sigma is not positive on the grid; the step matrix may be singular")
    n, dx = grid.n, grid.dx
    if zeta_tilde is None:
        drive = np.zeros((times.size, n))
    else:
        if zeta_tilde.values.shape != (times.size, n):
            raise ValueError("zeta_tilde does not match the dual grid and time lattice")
        drive = phi * centered_gradient(zeta_tilde.values, dx)
    rhs_all = xi_scale * xi + drive
    out = np.zeros((times.size, n))
    ab = np.empty((3, n))
    inv_dx2 = 1.0 / dx**2
    for k in range(1, times.size):
        h = times[k] - times[k - 1]
        s = sigma[k]
        # rows of I/h - s * (second difference with reflected ghosts)
        ab[0, 1:] = -s[:-1] * inv_dx2
        ab[0, 0] = 0.0
        ab[2, :-1] = -s[1:] * inv_dx2
        ab[2, -1] = 0.0
        ab[1] = 1.0 / h + 2.0 * s * inv_dx2
        ab[1, 0] -= s[0] * inv_dx2
        ab[1, -1] -= s[-1] * inv_dx2
        out[k] = solve_banded((1, 1), ab, out[k - 1] / h + rhs_all[k], check_finite=False)
    return SpaceTimeField(grid, times, out)


def x_norm_sq(values, dx):
    """Discrete ``H^1`` norm squared per frame: values plus forward differences."""
    grad = np.diff(values, axis=-1) / dx
    return dx * np.sum(values**2, axis=-1) + dx * np.sum(grad**2, axis=-1)


def l2x_norm(field_):
    """Discrete ``L^2(0, T; H^1)`` norm with the trapezoid rule in time."""
    return float(np.sqrt(trapezoid_in_time(field_.times, x_norm_sq(field_.values, field_.grid.dx))))


def picard_solve(duals, grid, dt, tol=1e-8, max_iter=50):
    """Fixed-point iteration of the auxiliary solve from the zero iterate.

    Stops when the ``L^2(0, T; H^1)`` increment is at most ``tol``; raises
    :class:`NumericalFailure` with the history after ``max_iter`` solves.
    """
    tol = check_positive(tol, "tol")
    max_iter = check_positive_int(max_iter, "max_iter")
    current = None
    history = []
    for _ in range(max_iter):
        nxt = solve_auxiliary(duals, current, grid, dt)
        prev_vals = 0.0 if current is None else current.values
        history.append(l2x_norm(nxt.map(lambda v: v - prev_vals)))
        current = nxt
        if history[-1] <= tol:
            return DualState(current, duals.epsilon, history, dt, duals.delta_sigma)
    raise NumericalFailure(f"Picard iteration did not reach {tol:g} in {max_iter} iterations", history=history)


def contraction_observed(history, burn_in=None, ratio=0.5):
    """True if, after ``burn_in`` iterations, some increment ratio falls below ``ratio``
    and the nonzero increments decrease from then on."""
    h = [x for x in history if x > 0]
    if len(h) < 2:
        return True
    start = 0 if burn_in is None else min(int(burn_in), len(h) - 2)
    ratios = [b / a for a, b in zip(h[start:-1], h[start + 1 :])]
    if not ratios:
        return True
    first = next((i for i, r in enumerate(ratios) if r < ratio), None)
    return first is not None and all(r < 1.0 for r in ratios[first:])


@dataclass(frozen=True)
class DualConstants:
    """Constants of the energy estimates for the auxiliary problem."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float


def dual_constants(duals):
    """``C1..C5`` from ``|phi|_inf``, ``|d_x sigma|_inf``, ``|d_t sigma|_inf`` and ``delta_sigma``.

    ``C1 = |phi|^2/2``, ``C2 = sx^2/(2 ds) + C1 + 1/2``, ``C3 = C2 exp(2 C2 T)``,
    ``C4 = 2 C1 exp(2 K T)`` with ``K = st/(2 ds) + sx^2/ds``, and
    ``C5 = 2 C3 + 2 C4 / ds``.
    """
    sx, st, ph = duals.derivative_bounds()
    ds, T = duals.delta_sigma, duals.horizon
    c1 = 0.5 * ph**2
    c2 = sx**2 / (2.0 * ds) + c1 + 0.5
    c3 = c2 * math.exp(2.0 * c2 * T)
    k = st / (2.0 * ds) + sx**2 / ds
    c4 = 2.0 * c1 * math.exp(2.0 * k * T)
    return DualConstants(c1, c2, c3, c4, 2.0 * c3 + 2.0 * c4 / ds)


def check_maximum_bound(state, xi_sup, margin_factor=1.05):
    """Report ``max (|zeta(t, x)| - M t) <= 0`` with ``M = margin_factor * xi_sup``.

    The slack ``10 dt xi_sup`` allows for the time discretization.
    """
    if margin_factor <= 1.0:
        raise ValueError("margin_factor must exceed 1")
    M = margin_factor * xi_sup
    z = state.zeta
    # the zero initial frame meets the bound with equality
    start = 1 if len(z) > 1 else 0
    excess = np.abs(z.values[start:]) - M * z.times[start:, None]
    return EstimateReport("maximum_bound", float(excess.max()), 0.0, 10.0 * state.dt * xi_sup, {"M": M})


def h1_quantities(state):
    """``(sup_t |d_x zeta|^2/2, (delta_sigma/4) int |d_xx zeta|^2, |d_x zeta|_{L4}^4)``."""
    z, dx = state.zeta, state.zeta.grid.dx
    grad = np.diff(z.values, axis=1) / dx
    lap = second_difference(z.values, dx)
    sup_grad = 0.5 * float(np.max(dx * np.sum(grad**2, axis=1)))
    lap_int = 0.25 * state.delta_sigma * float(trapezoid_in_time(z.times, dx * np.sum(lap**2, axis=1)))
    l4 = float(trapezoid_in_time(z.times, dx * np.sum(grad**4, axis=1)))
    return sup_grad, lap_int, l4


def check_h1_bounds(states):
    """Empirical ceiling on the gradient energy over a family of dual states.

    The ceiling ``c8`` is the largest ``sup_t |d_x zeta|^2/2 + (delta_sigma/4)
    int |d_xx zeta|^2`` over the family. Each state is reported against it, and
    ``|d_x zeta|_{L4}^4`` against ``8 c8^2 T + 8 c8^2 / delta_sigma``, which
    follows from the 1D Gagliardo-Nirenberg inequality and ``|d_x zeta|^2 <= 2 c8``.
    """
    if not states:
        return []
    quantities = [h1_quantities(s) for s in states]
    c8 = max(a + b for a, b, _ in quantities)
    out = []
    for s, (a, b, l4) in zip(states, quantities):
        tag = "" if s.epsilon is None else f"[{s.epsilon:g}]"
        T = s.zeta.horizon
        l4_bound = 8.0 * c8**2 * T + 8.0 * c8**2 / s.delta_sigma
        out.append(EstimateReport(f"h1_energy{tag}", a + b, c8, 1e-12 * (1 + c8), {"sup_grad": a, "lap_int": b}))
        out.append(EstimateReport(f"grad_l4{tag}", l4, l4_bound, 1e-12 * (1 + l4_bound)))
    return out


def spread_ratio(values):
    """``max / min`` of positive values (1 for a single value)."""
    values = [float(v) for v in values]
    lo = min(values)
    return float("inf") if lo <= 0 else max(values) / lo


def check_gronwall_estimate(duals, tilde1, tilde2, grid, dt):
    """Check the energy estimate for the difference of two auxiliary solves.

    ``zeta = G(tilde1) - G(tilde2)`` satisfies
    ``|zeta(t)|^2/2 + (delta_sigma/2) int_0^t |d_x zeta|^2 <= C3 int_0^t |tilde1 - tilde2|_X^2``
    at every stored time; the worst margin is reported.
    """
    z1 = solve_auxiliary(duals, tilde1, grid, dt)
    z2 = solve_auxiliary(duals, tilde2, grid, dt)
    dz = z1.values - z2.values
    dx, times = grid.dx, z1.times
    dtil = tilde1.values - tilde2.values
    grad_sq = dx * np.sum((np.diff(dz, axis=1) / dx) ** 2, axis=1)
    lhs = 0.5 * dx * np.sum(dz**2, axis=1) + 0.5 * duals.delta_sigma * _cumtrapz(grad_sq, times)
    c3 = dual_constants(duals).c3
    rhs = c3 * _cumtrapz(x_norm_sq(dtil, dx), times)
    i = int(np.argmin(rhs - lhs))
    return EstimateReport("gronwall_difference", float(lhs[i]), float(rhs[i]), 1e-12, {"t": float(times[i]), "c3": c3})


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def picard_history_to_csv(history, path=None):
    """CSV ``iteration,increment_l2x`` (1-based iteration)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "increment_l2x"])
    for k, inc in enumerate(history, start=1):
        writer.writerow([k, repr(float(inc))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# fixtures


def _bump_source(T, amplitude=1.0, center=(0.5, 0.5), radius=(0.4, 0.4)):
    """Smooth bump ``amplitude * e * exp(1/(r^2 - 1))`` with ``max = amplitude``."""
    tc, xc = center[0] * T, center[1]
    rt, rx = radius[0] * T, radius[1]

    def fn(t, x):
        r2 = ((np.asarray(t) - tc) / rt) ** 2 + ((np.asarray(x) - xc) / rx) ** 2
        out = np.zeros(np.shape(r2))
        inside = r2 < 1.0
        out[inside] = amplitude * np.e * np.exp(1.0 / (r2[inside] - 1.0))
        return out

    return PressureField(fn, T, sup_abs=abs(amplitude), label="bump")


def generic_dual_fixture(T=1.0, amplitude=1.0):
    """``sigma = 1 + 0.3 sin(2 pi x) cos(pi t/T)``, ``phi = sin(pi x)``, bump source."""
    sigma = PressureField(
        lambda t, x: 1.0 + 0.3 * np.sin(2 * np.pi * x) * np.cos(np.pi * t / T), T, zero_extended=False, label="sigma"
    )
    phi = PressureField(lambda t, x: np.sin(np.pi * x) + 0.0 * t, T, zero_extended=False, label="phi")
    return DualCoefficients(
        sigma=sigma,
        phi=phi,
        xi=_bump_source(T, amplitude),
        delta_sigma=0.7,
        c_sigma=1.3,
        c_q=1.0,
        xi_sup=abs(amplitude),
        sigma_x_sup=0.6 * np.pi,
        sigma_t_sup=0.3 * np.pi / T,
        phi_sup=1.0,
    )


def mode_fixture(g, T=1.0, g_sup=1.0):
    """``sigma = 1``, ``phi = 0``, ``xi = g(t) cos(pi x)``: the solution stays in the first cosine mode."""
    return DualCoefficients(
        sigma=PressureField(lambda t, x: np.ones(np.shape(t)), T, zero_extended=False, label="one"),
        phi=PressureField(lambda t, x: np.zeros(np.shape(t)), T, zero_extended=False, label="zero"),
        xi=PressureField(lambda t, x: g(np.asarray(t)) * np.cos(np.pi * np.asarray(x)), T, label="mode"),
        delta_sigma=1.0,
        c_sigma=1.0,
        c_q=1.0,
        xi_sup=g_sup,
        sigma_x_sup=0.0,
        sigma_t_sup=0.0,
        phi_sup=0.0,
    )


def rough_dual_fixture(epsilon, T=1.0, amplitude=1.0, quad_points=6, panels=2):
    """Discontinuous ``sigma`` and ``phi`` mollified at radius ``epsilon``.

    ``sigma`` jumps between 0.8 and 1.25 across ``x = 1/2`` with a time switch
    at ``T/2``; ``phi`` is ``q p`` with ``q`` a step in ``x`` and ``p`` the
    rough pressure pattern.
    """

    def sigma_fn(t, x):
        left = np.asarray(x) < 0.5
        early = np.asarray(t) < 0.5 * T
        return np.where(left == early, 0.8, 1.25)

    def phi_fn(t, x):
        q = np.where(np.asarray(x) < 0.3, 0.5, 1.5)
        slab = np.clip((np.asarray(t) / T * 4).astype(int), 0, 3)
        return q * np.array([1.0, -0.5, 0.75, -1.0])[slab] * np.cos(np.pi * np.asarray(x))

    sigma_raw = PressureField(
        sigma_fn, T, regularity="L4", fill_value=1.0, sup_abs=1.25, time_breaks=(0.5 * T,), space_breaks=(0.5,), label="sigma_rough"
    )
    phi_raw = PressureField(
        phi_fn,
        T,
        regularity="L4",
        sup_abs=1.5,
        time_breaks=(0.25 * T, 0.5 * T, 0.75 * T),
        space_breaks=(0.3,),
        label="phi_rough",
    )
    return smoothed_dual_coefficients(
        sigma_raw, phi_raw, _bump_source(T, amplitude), epsilon, 0.8, 1.25, 1.5, abs(amplitude), quad_points, panels
    )


def zero_source(duals):
    """Same coefficients with ``xi = 0``."""
    xi = PressureField(lambda t, x: np.zeros(np.shape(t)), duals.horizon, sup_abs=0.0, label="zero")
    return DualCoefficients(
        duals.sigma,
        duals.phi,
        xi,
        duals.delta_sigma,
        duals.c_sigma,
        duals.c_q,
        0.0,
        duals.sigma_x_sup,
        duals.sigma_t_sup,
        duals.phi_sup,
        duals.epsilon,
    )


def without_drift(duals):
    """Same coefficients with ``phi = 0``."""
    phi = PressureField(lambda t, x: np.zeros(np.shape(t)), duals.horizon, zero_extended=False, label="zero")
    return DualCoefficients(
        duals.sigma,
        phi,
        duals.xi,
        duals.delta_sigma,
        duals.c_sigma,
        duals.c_q,
        duals.xi_sup,
        duals.sigma_x_sup,
        duals.sigma_t_sup,
        0.0,
        duals.epsilon,
    )


__all__ = [
    "DualCoefficients",
    "DualConstants",
    "DualState",
    "SigmaQFields",
    "build_sigma_q",
    "check_gronwall_estimate",
    "check_h1_bounds",
    "check_maximum_bound",
    "contraction_observed",
    "dual_constants",
    "field_from_samples",
    "generic_dual_fixture",
    "h1_quantities",
    "l2x_norm",
    "mode_fixture",
    "picard_history_to_csv",
    "picard_solve",
    "rough_dual_fixture",
    "smoothed_dual_coefficients",
    "solve_auxiliary",
    "spread_ratio",
    "without_drift",
    "zero_source",
]
