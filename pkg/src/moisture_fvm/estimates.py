"""Numerical witnesses for the a priori estimates of the finite-volume scheme.

All routines return :class:`~moisture_fvm.reports.EstimateReport` objects so
results can be tabulated and serialized uniformly.
"""

from dataclasses import dataclass

import numpy as np

from .coefficients import h_hat, hhat_constants
from .grid import GridFunction, divided_difference_values, trapezoid_in_time
from .reports import EstimateReport, reports_from_csv, reports_to_csv, reports_to_json
from .validation import check_finite_array

__all__ = [
    "EstimateReport",
    "EnergyConstants",
    "PiecewiseLinear",
    "dual_norm_bound",
    "energy_budget",
    "energy_constants",
    "gn_inequality_check",
    "pairing_direct",
    "pairing_via_fluxes",
    "reports_from_csv",
    "reports_to_csv",
    "reports_to_json",
    "l2_h1_norm",
    "uniform_bounds",
]


def _pressure_matrix(traj, rho_cells_per_frame):
    rho = np.array([np.asarray(r.values if isinstance(r, GridFunction) else r, dtype=float) for r in rho_cells_per_frame])
    if rho.shape != traj.values.shape:
        raise ValueError(f"pressure frames have shape {rho.shape}, trajectory {traj.values.shape}")
    return rho


def energy_budget(traj, rho_cells_per_frame, coeffs):
    """Energy inequality at the final time.

    Checks::

        int hhat(z(T)) + 1/2 int_0^T int |v~|^2
            <= C_b^2/2 int_0^T int |rho(., x - dx)|^2 + int hhat(z(0))

    with ``z = h(v)`` and ``v~`` the backward divided difference. Time
    integrals use the trapezoid rule on the stored frames. The slack is
    ``1e-6 (1 + |rhs|)`` plus ``max_dt * (max_t |v~|^2/2 + C_b^2/2 max_t |rho|^2)``,
    which covers the gap between the trapezoid sums and the step sums the
    backward-Euler scheme satisfies exactly.
    """
    rho = _pressure_matrix(traj, rho_cells_per_frame)
    dx = traj.grid.dx
    z = coeffs.h(traj.values)
    hhat_T = dx * float(np.sum(h_hat(coeffs, z[-1])))
    hhat_0 = dx * float(np.sum(h_hat(coeffs, z[0])))
    grad_sq = dx * np.sum(divided_difference_values(traj.values, dx) ** 2, axis=1)
    # rho(t, x - dx) on (dx, 1) is rho_i on cells 1..n-1
    shifted_sq = dx * np.sum(rho[:, :-1] ** 2, axis=1)
    dissipation = 0.5 * float(trapezoid_in_time(traj.times, grad_sq))
    forcing = 0.5 * coeffs.c_b**2 * float(trapezoid_in_time(traj.times, shifted_sq))
    lhs = hhat_T + dissipation
    rhs = forcing + hhat_0
    max_dt = float(np.max(np.diff(traj.times))) if len(traj) > 1 else 0.0
    time_allowance = max_dt * (0.5 * grad_sq.max() + 0.5 * coeffs.c_b**2 * shifted_sq.max())
    slack = 1e-6 * (1.0 + abs(rhs)) + time_allowance
    details = {
        "hhat_final": hhat_T,
        "hhat_initial": hhat_0,
        "dissipation": dissipation,
        "forcing": forcing,
        "time_allowance": time_allowance,
    }
    return EstimateReport("energy_budget", lhs, rhs, slack, details)


@dataclass(frozen=True)
class EnergyConstants:
    """Bound ``energy`` on the energy and the derived uniform constant ``c15``."""

    energy: float
    v_sq: float
    z_sq: float
    v_grad_sq: float
    z_grad_sq: float

    @property
    def c15(self):
        return max(self.v_sq, self.z_sq, self.v_grad_sq, self.z_grad_sq)


def energy_constants(coeffs, pressure_l2, h_v0_l2):
    """Explicit candidate constants from the energy estimate.

    Parameters
    ----------
    coeffs : CoefficientSet
    pressure_l2 : float
        ``||p||`` in ``L^2`` of the space-time cylinder.
    h_v0_l2 : float
        ``||h(v_0)||`` in ``L^2(0, 1)``.

    Notes
    -----
    With ``E = C_b^2/2 ||p||^2 + c13 ||h(v0)||^2 + c14`` bounding the energy and
    ``g = h^{-1}(0)``, the lower bound ``hhat(z) >= |z|^2/(4 C_h) - C_h g^2``
    yields ``|z|^2 <= 4 C_h (E + C_h g^2)`` and ``int int |v~|^2 <= 2 (E + C_h g^2)``.
    ``|v|^2 <= c11 E + c12`` follows from the chained square bound and
    ``|z~| <= C_h |v~|`` bounds the last quantity.
    """
    k = hhat_constants(coeffs)
    ch, g0 = coeffs.c_h, coeffs.h_inv0
    energy = 0.5 * coeffs.c_b**2 * pressure_l2**2 + k.c13 * h_v0_l2**2 + k.c14
    shifted = energy + ch * g0**2
    return EnergyConstants(
        energy=energy,
        v_sq=k.c11 * energy + k.c12,
        z_sq=4.0 * ch * shifted,
        v_grad_sq=2.0 * shifted,
        z_grad_sq=2.0 * ch**2 * shifted,
    )


def uniform_bounds(traj, coeffs, pressure_l2, h_v0_l2=None, c15=None):
    """Compare the four energy-controlled quantities of a trajectory with ``c15``.

    ``h_v0_l2`` defaults to the L2 norm of ``h`` of the first frame; pass the
    value for the continuous initial datum to get one constant for a whole sweep.
    A precomputed ``c15`` overrides the one derived from the other arguments.
    """
    dx = traj.grid.dx
    v = traj.values
    z = coeffs.h(v)
    if h_v0_l2 is None:
        h_v0_l2 = float(np.sqrt(dx * np.sum(z[0] ** 2)))
    bound = energy_constants(coeffs, pressure_l2, h_v0_l2).c15 if c15 is None else float(c15)
    quantities = {
        "sup_v_sq": float(np.max(dx * np.sum(v**2, axis=1))),
        "sup_z_sq": float(np.max(dx * np.sum(z**2, axis=1))),
        "int_v_grad_sq": float(trapezoid_in_time(traj.times, dx * np.sum(divided_difference_values(v, dx) ** 2, axis=1))),
        "int_z_grad_sq": float(trapezoid_in_time(traj.times, dx * np.sum(divided_difference_values(z, dx) ** 2, axis=1))),
    }
    return [EstimateReport(name, val, bound, 1e-9 * (1.0 + bound)) for name, val in quantities.items()]


def _eta_cell_averages(eta, times, grid, quad_points=4):
    """Cell averages of ``eta(t, .)`` for every stored time; shape ``(frames, n)``."""
    x, w = grid.quadrature_nodes(quad_points)
    vals = eta.eval(times[:, None, None], x[None])
    return (vals * w).sum(axis=2) / grid.dx


def l2_h1_norm(eta, T, time_nodes=24, space_nodes=24):
    """``||eta||`` in ``L^2(0, T; H^1)`` by tensor Gauss-Legendre quadrature."""
    ut, wt = np.polynomial.legendre.leggauss(time_nodes)
    ux, wx = np.polynomial.legendre.leggauss(space_nodes)
    t, x = 0.5 * T * (ut + 1.0), 0.5 * (ux + 1.0)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    w = np.outer(0.5 * T * wt, 0.5 * wx)
    val = eta.eval(tt, xx) ** 2 + eta.dx_eval(tt, xx) ** 2
    return float(np.sqrt(np.sum(w * val)))


def _flux_matrix(traj, rho, coeffs):
    """Interior fluxes ``a_i`` for every frame; shape ``(frames, n - 1)``."""
    v, dx = traj.values, traj.grid.dx
    return (v[:, 1:] - v[:, :-1]) / dx + coeffs.b(0.5 * (v[:, :-1] + v[:, 1:])) * rho[:, :-1]


def pairing_via_fluxes(traj, rho, coeffs, eta):
    """``int int (d_t z) eta`` rewritten as fluxes times backward differences of eta.

    Time is summed with end-of-step values, the rule backward Euler satisfies
    exactly, so this equals :func:`pairing_direct` for a trajectory of the
    scheme up to solver tolerance.
    """
    a = _flux_matrix(traj, rho, coeffs)
    eb = _eta_cell_averages(eta, traj.times, traj.grid)
    per_frame = np.sum(a * (eb[:, :-1] - eb[:, 1:]), axis=1)
    return float(np.sum(np.diff(traj.times) * per_frame[1:]))


def pairing_direct(traj, coeffs, eta):
    """``int int (d_t z) eta`` from time differences of ``z = h(v)`` against end-of-step eta."""
    z = coeffs.h(traj.values)
    eb = _eta_cell_averages(eta, traj.times, traj.grid)
    return float(traj.grid.dx * np.sum((z[1:] - z[:-1]) * eb[1:]))


def dual_norm_bound(traj, rho_cells_per_frame, coeffs, eta_family, pressure_l2, c15, slack=1e-6):
    """Check ``|int int (d_t z) eta| <= c17 ||eta||_{L^2(0,T;H^1)}`` for each test function.

    ``c17 = max(c15, sqrt(c15)) + C_b ||p||``: the diffusive part of the pairing
    is bounded by the square root of the dissipation bound and the transport
    part by ``C_b`` times the pressure norm.
    """
    rho = _pressure_matrix(traj, rho_cells_per_frame)
    c17 = max(c15, np.sqrt(c15)) + coeffs.c_b * pressure_l2
    out = []
    for eta in eta_family:
        lhs = abs(pairing_via_fluxes(traj, rho, coeffs, eta))
        rhs = c17 * l2_h1_norm(eta, traj.horizon)
        out.append(EstimateReport(f"dual_norm[{eta.label}]", lhs, rhs, slack * (1.0 + rhs), {"c17": c17}))
    return out


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function through ``(knots, values)`` on ``[0, 1]``."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = check_finite_array(self.knots, "knots", ndim=1)
        y = check_finite_array(self.values, "values", ndim=1, length=x.size)
        if x.size < 2 or x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
            raise ValueError("knots must increase from 0 to 1")
        object.__setattr__(self, "knots", x)
        object.__setattr__(self, "values", y)

    @classmethod
    def from_grid_function(cls, gf):
        """Interpolate cell values at cell centers, constant towards both ends."""
        x = np.concatenate(([0.0], gf.grid.centers, [1.0]))
        y = np.concatenate(([gf.values[0]], gf.values, [gf.values[-1]]))
        return cls(x, y)

    @classmethod
    def from_callable(cls, f, knots=4097):
        x = np.linspace(0.0, 1.0, knots)
        return cls(x, np.asarray(f(x), dtype=float) * np.ones_like(x))

    def norms(self):
        """Exact ``(sup, L2, derivative L2)`` norms."""
        h = np.diff(self.knots)
        a, b = self.values[:-1], self.values[1:]
        l2 = np.sqrt(np.sum(h * (a * a + a * b + b * b) / 3.0))
        d = np.sqrt(np.sum((b - a) ** 2 / h))
        return float(np.max(np.abs(self.values))), float(l2), float(d)


def gn_inequality_check(u, name="gagliardo_nirenberg"):
    """Check ``|u|_inf^2 <= |u|_2^2 + 2 |u|_2 |u'|_2`` exactly for a piecewise-linear ``u``.

    ``u`` may be a :class:`PiecewiseLinear`, a GridFunction (interpolated
    through cell centers) or a callable (interpolated on 4097 uniform knots).
    """
    if isinstance(u, GridFunction):
        u = PiecewiseLinear.from_grid_function(u)
    elif not isinstance(u, PiecewiseLinear):
        u = PiecewiseLinear.from_callable(u)
    sup, l2, d = u.norms()
    rhs = l2**2 + 2.0 * l2 * d
    return EstimateReport(name, sup**2, rhs, 1e-12 * (1.0 + rhs))
