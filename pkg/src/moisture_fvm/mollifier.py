"""Bump mollifiers, space-time fields and their mollified regularizations.

A :class:`PressureField` wraps a vectorized map ``(t, x) -> value`` defined on
the cylinder ``[0, T] x [0, 1]``. Outside the open cylinder the field takes a
constant ``fill_value`` (zero for a pressure, one for a diffusivity-type
coefficient) before it is convolved with a kernel.

Convolutions are evaluated lazily: each query point integrates the kernel
against the extended field by composite Gauss-Legendre quadrature over the
kernel box clipped to the cylinder. The result is a convex combination of the
weighted mean of the field inside the cylinder and the extension value, with
the inside share given by the discrete kernel mass relative to the full box.
Constants are therefore reproduced to rounding error and the result never
leaves the range of the field and its extension value.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .grid import GridFunction, UniformGrid
from .reports import EstimateReport
from .validation import check_positive, check_positive_int

REGULARITY_TAGS = ("L2", "L4", "continuous")


def _bump(s2):
    """``exp(1/(s2 - 1))`` for ``s2 < 1`` and zero elsewhere."""
    s2 = np.asarray(s2, dtype=float)
    inside = s2 < 1.0
    out = np.zeros_like(s2)
    out[inside] = np.exp(1.0 / (s2[inside] - 1.0))
    return out


@lru_cache(maxsize=None)
def _unit_mass(dim):
    """Integral of the unit-radius bump over the line (dim 1) or the plane (dim 2)."""
    if dim == 1:
        return 2.0 * quad(lambda s: float(_bump(s * s)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]
    return 2.0 * np.pi * quad(lambda r: r * float(_bump(r * r)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13)[0]


@dataclass(frozen=True)
class MollifierKernel:
    """Normalized bump of radius ``delta`` on the line or (radially) on the plane.

    Parameters
    ----------
    delta : float
        Support radius.
    dim : {1, 2}
        Ambient dimension.
    normalization : float
        ``delta**dim`` times the unit-radius bump mass; the kernel is the bump
        profile divided by this number.
    """

    delta: float
    dim: int
    normalization: float

    def __call__(self, *coords):
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinate array(s), got {len(coords)}")
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords) / self.delta**2
        return _bump(r2) / self.normalization

    @property
    def peak(self):
        return np.exp(-1.0) / self.normalization

    @property
    def lipschitz_constant(self):
        """Largest radial slope of the kernel, times ``delta**(dim + 1)``."""
        s = np.linspace(0.0, 1.0, 200001)[1:-1]
        slope = 2.0 * s / (s * s - 1.0) ** 2 * _bump(s * s)
        return float(slope.max()) / _unit_mass(self.dim)

    @property
    def derivative_l1(self):
        """``delta`` times the L1 norm of one partial derivative of the kernel.

        For a field bounded by ``M`` the convolution has slope at most
        ``M * derivative_l1 / delta`` in each coordinate.
        """
        if self.dim == 1:
            return 2.0 * np.exp(-1.0) / _unit_mass(1)
        return 2.0 * _unit_mass(1) / _unit_mass(2)

    def mass(self):
        """Kernel integral by adaptive quadrature; should be 1."""
        if self.dim == 1:
            return 2.0 * quad(lambda r: float(self(r)), 0.0, self.delta, epsabs=1e-14)[0]
        return 2.0 * np.pi * quad(lambda r: r * float(self(r, 0.0)), 0.0, self.delta, epsabs=1e-14)[0]


def _make_kernel(delta, dim):
    delta = check_positive(delta, "delta")
    kernel = MollifierKernel(delta, dim, delta**dim * _unit_mass(dim))
    err = abs(kernel.mass() - 1.0)
    if err > 1e-8:
        raise RuntimeError(f"kernel mass deviates from 1 by {err:.3g}")
    return kernel


def kernel_1d(delta):
    """Unit-mass bump on the line supported in ``[-delta, delta]``."""
    return _make_kernel(delta, 1)


def kernel_2d(delta):
    """Unit-mass radial bump on the plane supported in the disc of radius ``delta``."""
    return _make_kernel(delta, 2)


@dataclass(frozen=True, eq=False)
class PressureField:
    """A scalar field on the space-time cylinder ``[0, T] x [0, 1]``.

    Parameters
    ----------
    fn : callable
        Vectorized ``fn(t, x)``; must be finite on the closed cylinder.
    horizon : float
        Final time ``T``.
    regularity : {"L2", "L4", "continuous"}
        What the field is known to satisfy.
    zero_extended : bool
        If true, ``__call__`` returns ``fill_value`` outside the open cylinder.
        Mollified fields are defined on the whole plane and set this to false.
    fill_value : float
        Value of the extension; zero for pressures.
    sup_abs : float or None
        A bound on ``|fn|`` over the cylinder, if known.
    time_breaks, space_breaks : tuple of float
        Interior jump locations; quadrature panels are split there.
    smooth_scale : float or None
        Length scale of variation for smooth fields (the mollification radius).
    """

    fn: object
    horizon: float
    regularity: str = "continuous"
    zero_extended: bool = True
    fill_value: float = 0.0
    sup_abs: float = None
    time_breaks: tuple = ()
    space_breaks: tuple = ()
    smooth_scale: float = None
    label: str = "field"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_positive(self.horizon, "horizon")
        if self.regularity not in REGULARITY_TAGS:
            raise ValueError(f"regularity must be one of {REGULARITY_TAGS}, got {self.regularity!r}")
        object.__setattr__(self, "time_breaks", tuple(float(b) for b in self.time_breaks))
        object.__setattr__(self, "space_breaks", tuple(float(b) for b in self.space_breaks))

    def evaluate(self, t, x):
        """Field values at points of the closed cylinder (no extension applied)."""
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        if self.zero_extended:
            tol = 1e-12 * max(1.0, self.horizon)
            if np.any((t < -tol) | (t > self.horizon + tol) | (x < -1e-12) | (x > 1 + 1e-12)):
                raise ValueError("evaluate() needs points of the closed cylinder")
        out = np.asarray(self.fn(t, x), dtype=float) * np.ones(t.shape)
        if not np.all(np.isfinite(out)):
            bad = np.argwhere(~np.isfinite(out))[0]
            raise ValueError(f"{self.label} is not finite at t={t[tuple(bad)]!r}, x={x[tuple(bad)]!r}")
        return out

    def __call__(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        if not self.zero_extended:
            return self.evaluate(t, x)
        inside = (t > 0) & (t < self.horizon) & (x > 0) & (x < 1)
        out = np.full(t.shape, float(self.fill_value))
        if inside.any():
            out[inside] = self.evaluate(t[inside], x[inside])
        return out


def _panel_rule(lo, hi, breaks, panels, nodes):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]`` for arrays of intervals.

    Each interval is cut at the breakpoints that fall inside it, then every piece
    is split into ``panels`` equal panels with ``nodes`` points each. Returns
    arrays of shape ``(len(lo), pieces * panels * nodes)``.
    """
    u, w = np.polynomial.legendre.leggauss(nodes)
    cuts = [lo, hi] + [np.clip(b, lo, hi) for b in breaks]
    cuts = np.sort(np.stack(cuts, axis=1), axis=1)
    fr = np.arange(panels + 1) / panels
    a, b = cuts[:, :-1], cuts[:, 1:]
    edges = a[..., None] + (b - a)[..., None] * fr
    left, half = edges[..., :-1], 0.5 * np.diff(edges, axis=-1)
    pts = left[..., None] + half[..., None] * (u + 1.0)
    wts = half[..., None] * w
    m = lo.shape[0]
    return pts.reshape(m, -1), wts.reshape(m, -1)


class _Convolution:
    """Callable ``(t, x) -> (kernel * extended field)(t, x)``."""

    def __init__(self, base, delta, mode, quad_points, panels, chunk=2048):
        self.base = base
        self.delta = delta
        self.mode = mode
        self.quad_points = quad_points
        self.panels = panels
        self.chunk = chunk
        if mode == "radial":
            k = kernel_2d(delta)
            self._kernel = lambda ds, dy: k(ds, dy)
        else:
            k = kernel_1d(delta)
            self._kernel = lambda ds, dy: k(ds) * k(dy)
        zero = np.zeros(1)
        s, ws = _panel_rule(zero - delta, zero + delta, (), panels, quad_points)
        kmat = self._kernel(s[0][:, None], s[0][None, :])
        self._full_mass = float(ws[0] @ kmat @ ws[0])

    def __call__(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        shape = t.shape
        t, x = t.ravel(), x.ravel()
        out = np.empty(t.size)
        for start in range(0, t.size, self.chunk):
            sl = slice(start, start + self.chunk)
            out[sl] = self._block(t[sl], x[sl])
        return out.reshape(shape)

    def _block(self, t, x):
        base, d = self.base, self.delta
        t_lo, t_hi = np.clip(t - d, 0.0, base.horizon), np.clip(t + d, 0.0, base.horizon)
        x_lo, x_hi = np.clip(x - d, 0.0, 1.0), np.clip(x + d, 0.0, 1.0)
        s, ws = _panel_rule(t_lo, t_hi, base.time_breaks, self.panels, self.quad_points)
        y, wy = _panel_rule(x_lo, x_hi, base.space_breaks, self.panels, self.quad_points)
        kern = self._kernel((t[:, None] - s)[:, :, None], (x[:, None] - y)[:, None, :])
        weights = ws[:, :, None] * wy[:, None, :] * kern
        vals = base.evaluate(np.broadcast_to(s[:, :, None], weights.shape), np.broadcast_to(y[:, None, :], weights.shape))
        inside_mass = weights.sum(axis=(1, 2))
        clipped = (t - d < 0.0) | (t + d > base.horizon) | (x - d < 0.0) | (x + d > 1.0)
        # share of the kernel mass that falls inside the cylinder
        theta = np.where(clipped, np.minimum(1.0, inside_mass / self._full_mass), 1.0)
        mean_inside = np.zeros_like(inside_mass)
        nz = inside_mass > 0
        mean_inside[nz] = (weights[nz] * vals[nz]).sum(axis=(1, 2)) / inside_mass[nz]
        return theta * mean_inside + (1.0 - theta) * base.fill_value


def mollify(p, delta, quad_points=6, mode="radial", panels=4):
    """Convolve the extended field ``p`` with a bump of radius ``delta``.

    Parameters
    ----------
    p : PressureField
        Field to smooth; it is extended by ``p.fill_value`` outside the cylinder.
    delta : float
        Kernel radius.
    quad_points : int
        Gauss-Legendre nodes per panel and per coordinate.
    mode : {"radial", "tensor"}
        Radial bump on the plane, or the product of two 1D bumps.
    panels : int
        Panels per coordinate and per smooth piece of the clipped kernel box.

    Returns
    -------
    PressureField
        A smooth field defined on the whole plane, bounded by
        ``max(sup|p|, |fill_value|)``.
    """
    delta = check_positive(delta, "delta")
    quad_points = check_positive_int(quad_points, "quad_points")
    panels = check_positive_int(panels, "panels")
    if mode not in ("radial", "tensor"):
        raise ValueError(f"mode must be 'radial' or 'tensor', got {mode!r}")
    sup = None if p.sup_abs is None else max(p.sup_abs, abs(p.fill_value))
    return PressureField(
        fn=_Convolution(p, delta, mode, quad_points, panels),
        horizon=p.horizon,
        regularity="continuous",
        zero_extended=False,
        fill_value=p.fill_value,
        sup_abs=sup,
        smooth_scale=delta,
        label=f"{p.label}*J[{mode},{delta:g}]",
        meta={"base": p, "delta": delta, "mode": mode},
    )


def mollified_cell_averages(rho, grid, t, quad_points=4):
    """Cell averages of ``rho(t, .)`` on ``grid``."""
    t = float(t)
    if not (0.0 <= t <= rho.horizon * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, {rho.horizon}], got {t}")
    x, w = grid.quadrature_nodes(quad_points)
    vals = rho.evaluate(np.full(x.shape, min(t, rho.horizon)), x)
    return GridFunction(grid, (vals * w).sum(axis=1) / grid.dx)


def _smooth_table(field_, points_per_scale=24):
    """Spatial antiderivatives of a smooth field on a time lattice, cached on the field.

    Returns ``(knots, spline)`` where ``spline(x)[k]`` approximates the integral
    of ``field_(knots[k], .)`` over ``[0, x]``.
    """
    cached = field_.meta.get("_table")
    if cached is not None and cached[0] == points_per_scale:
        return cached[1], cached[2]
    T = field_.horizon
    t_scale = min(field_.smooth_scale, T / np.pi)
    x_scale = min(field_.smooth_scale, 1.0 / (2.0 * np.pi))
    knots = np.linspace(0.0, T, max(16, int(np.ceil(points_per_scale * T / t_scale))) + 1)
    xs = np.linspace(0.0, 1.0, max(16, int(np.ceil(points_per_scale / x_scale))) + 1)
    tt, xx = np.meshgrid(knots, xs, indexing="ij")
    vals = field_.evaluate(tt, xx)
    spline = CubicSpline(xs, vals, axis=1).antiderivative()
    field_.meta["_table"] = (points_per_scale, knots, spline)
    return knots, spline


class CellAverageSampler:
    """Cell averages of a field at arbitrary times in ``[0, T]``.

    Smooth fields (those with a ``smooth_scale``) are tabulated once on a
    space-time lattice resolving that scale; cell averages come from the
    spatial spline antiderivative and are interpolated in time with cubic
    splines. Other fields are averaged directly at each requested time.
    """

    def __init__(self, field_, grid, quad_points=4, points_per_scale=24):
        self.field = field_
        self.grid = grid
        self.quad_points = quad_points
        self._spline = None
        self._zero = field_.sup_abs == 0.0
        if field_.smooth_scale is not None and not self._zero:
            knots, antider = _smooth_table(field_, points_per_scale)
            cum = antider(grid.edges)
            self._spline = CubicSpline(knots, np.diff(cum, axis=1) / grid.dx, axis=0)

    def __call__(self, t):
        if self._zero:
            return np.zeros(self.grid.n)
        if self._spline is not None:
            if not (0.0 <= t <= self.field.horizon * (1 + 1e-12)):
                raise ValueError(f"t must lie in [0, {self.field.horizon}], got {t}")
            return np.asarray(self._spline(t), dtype=float)
        return mollified_cell_averages(self.field, self.grid, t, self.quad_points).values


def sample_on_cylinder(field_, nt=200, nx=200, extended=False):
    """Midpoint samples ``(t, x, values)`` of a field on an ``nt x nx`` lattice."""
    t = (np.arange(nt) + 0.5) * field_.horizon / nt
    x = (np.arange(nx) + 0.5) / nx
    tt, xx = np.meshgrid(t, x, indexing="ij")
    vals = field_(tt, xx) if extended else field_.evaluate(tt, xx)
    return tt, xx, vals


def cylinder_l2(field_, nt=200, nx=200):
    """Midpoint-rule L2 norm over the cylinder."""
    _, _, vals = sample_on_cylinder(field_, nt, nx)
    return float(np.sqrt(np.mean(vals**2) * field_.horizon))


def l2_distance(a, b, nt=200, nx=200):
    """Midpoint-rule L2 distance between two fields over the cylinder."""
    _, _, va = sample_on_cylinder(a, nt, nx)
    _, _, vb = sample_on_cylinder(b, nt, nx)
    return float(np.sqrt(np.mean((va - vb) ** 2) * a.horizon))


def check_l2_nonexpansive(p, rho, nt=200, nx=200, slack=1e-6):
    """Report ``||rho||_{L2(Q)} <= ||p||_{L2(Q)}`` on a midpoint lattice."""
    return EstimateReport(f"l2_nonexpansive[{rho.label}]", cylinder_l2(rho, nt, nx), cylinder_l2(p, nt, nx), slack)


def check_smoothness(rho, eta=1e-4, nt=40, nx=40):
    """Report the largest sampled spatial difference quotient against ``K / delta``.

    ``K`` is the field bound times :attr:`MollifierKernel.derivative_l1`.
    """
    base, delta, mode = rho.meta["base"], rho.meta["delta"], rho.meta["mode"]
    if rho.sup_abs is None:
        raise ValueError("the base field needs a known sup_abs")
    kern = kernel_2d(delta) if mode == "radial" else kernel_1d(delta)
    t = np.linspace(0.0, base.horizon, nt)
    x = np.linspace(0.0, 1.0 - eta, nx)
    tt, xx = np.meshgrid(t, x, indexing="ij")
    quot = np.abs(rho(tt, xx + eta) - rho(tt, xx)) / eta
    bound = rho.sup_abs * kern.derivative_l1 / delta
    return EstimateReport(f"smoothness[{rho.label}]", float(quot.max()), bound, 1e-9 * bound)


def _field(fn, T, label, sup_abs, regularity="continuous", **kw):
    return PressureField(fn=fn, horizon=T, regularity=regularity, sup_abs=sup_abs, label=label, **kw)


def zero_pressure(T=1.0):
    return _field(lambda t, x: np.zeros(np.shape(t)), T, "zero", 0.0)


def constant_pressure(T=1.0, value=1.0):
    value = float(value)
    return _field(lambda t, x: np.full(np.shape(t), value), T, "constant", abs(value))


def sine_product_pressure(T=1.0, amplitude=1.0):
    """``amplitude * sin(2 pi x) * cos(pi t / T)``."""
    return _field(
        lambda t, x: amplitude * np.sin(2 * np.pi * x) * np.cos(np.pi * t / T), T, "sine-product", abs(amplitude)
    )


def sine_bubble_pressure(T=1.0, amplitude=1.0):
    """``amplitude * sin(pi t / T) * sin(pi x)``; vanishes on the cylinder boundary."""
    return _field(
        lambda t, x: amplitude * np.sin(np.pi * t / T) * np.sin(np.pi * x), T, "sine-bubble", abs(amplitude)
    )


ROUGH_LEVELS = (1.0, -0.5, 0.75, -1.0)


def rough_pressure(T=1.0, levels=ROUGH_LEVELS):
    """Piecewise constant in time on equal slabs, times ``cos(pi x)``; square integrable only."""
    levels = np.asarray(levels, dtype=float)
    k = levels.size
    breaks = tuple(T * j / k for j in range(1, k))

    def fn(t, x):
        slab = np.clip((np.asarray(t) / T * k).astype(int), 0, k - 1)
        return levels[slab] * np.cos(np.pi * x)

    return _field(fn, T, "rough", float(np.abs(levels).max()), regularity="L2", time_breaks=breaks)


PRESSURES = {
    "zero": zero_pressure,
    "constant": constant_pressure,
    "sine-product": sine_product_pressure,
    "sine-bubble": sine_bubble_pressure,
    "rough": rough_pressure,
}


def get_pressure(name, T=1.0, **kw):
    """Build a registered pressure fixture by name."""
    try:
        factory = PRESSURES[name]
    except KeyError:
        raise ValueError(f"unknown pressure fixture {name!r}; choose from {sorted(PRESSURES)}") from None
    return factory(T=T, **kw)
