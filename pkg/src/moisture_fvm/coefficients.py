"""The nonlinearity pair (h, b), its structural bounds, h^{-1} and the primitive h-hat.

All maps are numpy-vectorized: they accept scalars or arrays and broadcast.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .reports import EstimateReport
from .validation import CoefficientError, NumericalFailure, check_positive, check_positive_int

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
# rescaled to [0, 1]
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class CoefficientSet:
    """Storage function ``h`` and transport coefficient ``b`` with their bounds.

    The assumptions checked by :func:`validate_assumptions` are
    ``delta_h <= h' <= c_h``, ``|h''| <= c_h``, ``delta_b <= b <= c_b`` and
    ``|b'|, |b''| <= c_b``.
    """

    h: Callable
    dh: Callable
    d2h: Callable
    b: Callable
    db: Callable
    d2b: Callable
    delta_h: float
    c_h: float
    delta_b: float
    c_b: float
    name: str = "custom"

    def __post_init__(self):
        for attr in ("delta_h", "c_h", "delta_b", "c_b"):
            object.__setattr__(self, attr, check_positive(getattr(self, attr), attr))
        if self.delta_h > self.c_h:
            raise ValueError("delta_h must not exceed c_h")
        if self.delta_b > self.c_b:
            raise ValueError("delta_b must not exceed c_b")

    @property
    def h0(self):
        return float(self.h(0.0))

    @property
    def h_inv0(self):
        """``h^{-1}(0)``."""
        return float(h_inverse(self, 0.0))


def _const(value):
    return lambda r: np.full(np.shape(r), float(value)) if np.ndim(r) else float(value)


def identity():
    """``h(r) = r``, ``b = 1`` with every bound equal to one."""
    return CoefficientSet(
        h=lambda r: np.asarray(r, dtype=float) * 1.0,
        dh=_const(1.0),
        d2h=_const(0.0),
        b=_const(1.0),
        db=_const(0.0),
        d2b=_const(0.0),
        delta_h=1.0,
        c_h=1.0,
        delta_b=1.0,
        c_b=1.0,
        name="identity",
    )


def linear(slope=2.0, b_value=1.0):
    """``h(r) = slope * r`` with a constant ``b``."""
    slope = check_positive(slope, "slope")
    return CoefficientSet(
        h=lambda r: slope * np.asarray(r, dtype=float),
        dh=_const(slope),
        d2h=_const(0.0),
        b=_const(b_value),
        db=_const(0.0),
        d2b=_const(0.0),
        delta_h=slope,
        c_h=slope,
        delta_b=b_value,
        c_b=b_value,
        name="linear",
    )


def sinusoidal():
    """``h(r) = r + 0.4 sin r`` and ``b(r) = 2 + 0.5 tanh r``.

    ``h'`` ranges over [0.6, 1.4]; ``b`` over (1.5, 2.5) with ``|b'| <= 0.5``
    and ``|b''| <= 4/(3 sqrt 3) * 0.5``.
    """

    def b(r):
        return 2.0 + 0.5 * np.tanh(r)

    def db(r):
        return 0.5 / np.cosh(r) ** 2

    def d2b(r):
        return -np.tanh(r) / np.cosh(r) ** 2

    return CoefficientSet(
        h=lambda r: r + 0.4 * np.sin(r),
        dh=lambda r: 1.0 + 0.4 * np.cos(r),
        d2h=lambda r: -0.4 * np.sin(r),
        b=b,
        db=db,
        d2b=d2b,
        delta_h=0.6,
        c_h=1.4,
        delta_b=1.5,
        c_b=2.5,
        name="sinusoidal",
    )


def trigonometric(h_slope=1.0, h_terms=((0.3, 1.0),), b_base=2.0, b_terms=((0.5, 1.0),), bounds=None):
    """Polynomial-plus-bounded-trig pair.

    ``h(r) = h_slope*r + sum a*sin(w*r)`` over ``h_terms = ((a, w), ...)`` and
    ``b(r) = b_base + sum c*cos(k*r)`` over ``b_terms``. When ``bounds`` is
    ``None`` the declared bounds ``(delta_h, c_h, delta_b, c_b)`` are the
    triangle-inequality ones.
    """
    h_terms = tuple((float(a), float(w)) for a, w in h_terms)
    b_terms = tuple((float(c), float(k)) for c, k in b_terms)

    def h(r):
        r = np.asarray(r, dtype=float)
        return h_slope * r + sum(a * np.sin(w * r) for a, w in h_terms)

    def dh(r):
        r = np.asarray(r, dtype=float)
        return h_slope + sum(a * w * np.cos(w * r) for a, w in h_terms)

    def d2h(r):
        r = np.asarray(r, dtype=float)
        return 0.0 * r - sum(a * w * w * np.sin(w * r) for a, w in h_terms)

    def b(r):
        r = np.asarray(r, dtype=float)
        return b_base + sum(c * np.cos(k * r) for c, k in b_terms)

    def db(r):
        r = np.asarray(r, dtype=float)
        return 0.0 * r - sum(c * k * np.sin(k * r) for c, k in b_terms)

    def d2b(r):
        r = np.asarray(r, dtype=float)
        return 0.0 * r - sum(c * k * k * np.cos(k * r) for c, k in b_terms)

    if bounds is None:
        s1 = sum(abs(a * w) for a, w in h_terms)
        s2 = sum(abs(a * w * w) for a, w in h_terms)
        t0 = sum(abs(c) for c, _ in b_terms)
        t1 = sum(abs(c * k) for c, k in b_terms)
        t2 = sum(abs(c * k * k) for c, k in b_terms)
        bounds = (h_slope - s1, max(h_slope + s1, s2), b_base - t0, max(b_base + t0, t1, t2))
    if bounds[0] <= 0 or bounds[2] <= 0:
        raise CoefficientError(f"declared bounds {bounds} do not give positive lower bounds")
    return CoefficientSet(h, dh, d2h, b, db, d2b, *bounds, name="trigonometric")


REGISTRY = {
    "identity": identity,
    "linear": linear,
    "sinusoidal": sinusoidal,
    "trigonometric": trigonometric,
}


def get_coefficients(name, **kwargs):
    """Look up a shipped coefficient pair by name."""
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown coefficient set {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(**kwargs)


def _evaluate(fn, r, label):
    vals = np.asarray(fn(r), dtype=float) * np.ones_like(r)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise CoefficientError(f"{label} is not finite at r = {r[bad][0]!r}")
    return vals


def _check_derivative(f, df, r, label):
    step = 1e-5 * (1.0 + np.abs(r))
    fd = (_evaluate(f, r + step, label) - _evaluate(f, r - step, label)) / (2.0 * step)
    supplied = _evaluate(df, r, label)
    err = np.abs(fd - supplied)
    bad = err > 1e-6 * np.maximum(1.0, np.abs(supplied))
    if bad.any():
        i = int(np.argmax(bad))
        raise CoefficientError(
            f"supplied {label} disagrees with a central difference at r = {r[i]!r} "
            f"({supplied[i]!r} vs {fd[i]!r})"
        )


def validate_assumptions(coeffs, interval=(-50.0, 50.0), samples=20001):
    """Sample the six structural bounds on ``interval``.

    Returns one :class:`EstimateReport` per bound carrying the worst case over
    the samples. Raises :class:`CoefficientError` on a non-finite evaluation or
    when a supplied derivative disagrees with a central finite difference.
    """
    check_positive_int(samples, "samples", minimum=2)
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ValueError(f"interval must be nonempty, got {interval}")
    r = np.linspace(lo, hi, samples)

    h1 = _evaluate(coeffs.dh, r, "h'")
    h2 = _evaluate(coeffs.d2h, r, "h''")
    bv = _evaluate(coeffs.b, r, "b")
    b1 = _evaluate(coeffs.db, r, "b'")
    b2 = _evaluate(coeffs.d2b, r, "b''")
    _evaluate(coeffs.h, r, "h")

    _check_derivative(coeffs.h, coeffs.dh, r, "h'")
    _check_derivative(coeffs.dh, coeffs.d2h, r, "h''")
    _check_derivative(coeffs.b, coeffs.db, r, "b'")
    _check_derivative(coeffs.db, coeffs.d2b, r, "b''")

    def worst_low(bound, vals, name):
        i = int(np.argmin(vals))
        return EstimateReport(name, bound, vals[i], details={"r": float(r[i])})

    def worst_high(vals, bound, name):
        i = int(np.argmax(vals))
        return EstimateReport(name, vals[i], bound, details={"r": float(r[i])})

    return [
        worst_low(coeffs.delta_h, h1, "h_prime_lower"),
        worst_high(h1, coeffs.c_h, "h_prime_upper"),
        worst_high(np.abs(h2), coeffs.c_h, "h_second_abs"),
        worst_low(coeffs.delta_b, bv, "b_lower"),
        worst_high(bv, coeffs.c_b, "b_upper"),
        worst_high(np.maximum(np.abs(b1), np.abs(b2)), coeffs.c_b, "b_derivatives_abs"),
    ]


def h_inverse(coeffs, z, tol=1e-12, max_iter=200):
    """Solve ``h(r) = z`` by Newton's method safeguarded with a bisection bracket.

    Vectorized over ``z``. The bracket is grown geometrically around the
    start ``z / c_h`` until it encloses the root, which always happens since
    ``h' >= delta_h``.
    """
    tol = check_positive(tol, "tol")
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr).astype(float)
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("h_inverse requires finite targets")

    r = z_arr / coeffs.c_h
    g = coeffs.h(r) - z_arr
    width = np.maximum(np.abs(g) / coeffs.c_h, 1e-3)
    lo = r - width
    hi = r + width
    for _ in range(200):
        glo = coeffs.h(lo) - z_arr
        ghi = coeffs.h(hi) - z_arr
        bad_lo = glo > 0
        bad_hi = ghi < 0
        if not (bad_lo.any() or bad_hi.any()):
            break
        width = width * 2.0
        lo = np.where(bad_lo, r - width, lo)
        hi = np.where(bad_hi, r + width, hi)
    else:
        raise NumericalFailure("h_inverse could not bracket the root")

    done = np.abs(g) <= tol
    for _ in range(max_iter):
        if done.all():
            break
        active = ~done
        ra, ga = r[active], g[active]
        step = ga / coeffs.dh(ra)
        cand = ra - step
        la, ha = lo[active], hi[active]
        outside = ~((cand > la) & (cand < ha))
        cand = np.where(outside, 0.5 * (la + ha), cand)
        gc = coeffs.h(cand) - z_arr[active]
        la = np.where(gc < 0, cand, la)
        ha = np.where(gc > 0, cand, ha)
        r[active], g[active], lo[active], hi[active] = cand, gc, la, ha
        # stagnation at the floating-point resolution of the bracket counts as converged
        collapsed = (ha - la) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(cand))
        done[active] = (np.abs(gc) <= tol) | collapsed | (gc == 0)
    else:
        if not done.all():
            res = float(np.max(np.abs(g[~done])))
            raise NumericalFailure(f"h_inverse hit the iteration cap (residual {res:.3e})", residual=res)
    return float(r[0]) if scalar else r.reshape(np.shape(z))


def _gl_pieces(f, a, b):
    """8-node Gauss-Legendre on each piece ``[a_k, b_k]``."""
    width = b - a
    nodes = a[:, None] + width[:, None] * _GL_U[None, :]
    return width * (f(nodes) @ _GL_W)


def _adaptive_pieces(f, a, b, tol, max_depth=40):
    """Integrate ``f`` over every piece, bisecting pieces whose halves disagree."""
    out = np.zeros_like(a)
    idx = np.arange(a.size)
    tol = np.broadcast_to(np.asarray(tol, dtype=float), a.shape)
    coarse = _gl_pieces(f, a, b)
    for _ in range(max_depth):
        if idx.size == 0:
            return out
        mid = 0.5 * (a + b)
        left = _gl_pieces(f, a, mid)
        right = _gl_pieces(f, mid, b)
        fine = left + right
        # never ask for more than rounding allows
        ok = np.abs(fine - coarse) <= np.maximum(tol, 64 * np.finfo(float).eps * np.abs(fine))
        np.add.at(out, idx[ok], fine[ok])
        keep = ~ok
        idx = np.concatenate([idx[keep], idx[keep]])
        a, b = np.concatenate([a[keep], mid[keep]]), np.concatenate([mid[keep], b[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
        tol = np.concatenate([tol[keep], tol[keep]]) / 2.0
    raise NumericalFailure("adaptive quadrature exceeded its subdivision depth")


def h_hat(coeffs, z, tol=1e-10, max_piece=0.5):
    """Primitive ``int_0^z h^{-1}(s) ds`` by adaptive composite Gauss-Legendre.

    All requested ``z`` become breakpoints together with 0 and a lattice of
    spacing ``max_piece``; each piece is integrated adaptively and the
    primitive follows by prefix sums, so the total absolute error stays below
    ``tol``.
    """
    tol = check_positive(tol, "tol")
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_flat = np.atleast_1d(z_arr).ravel()
    if not np.all(np.isfinite(z_flat)):
        raise ValueError("h_hat requires finite arguments")
    lo, hi = min(0.0, z_flat.min()), max(0.0, z_flat.max())
    if hi == lo:
        return 0.0 if scalar else np.zeros(z_arr.shape)
    lattice = np.linspace(lo, hi, int(np.ceil((hi - lo) / max_piece)) + 1)
    pts = np.unique(np.concatenate([lattice, z_flat, [0.0]]))
    a, b = pts[:-1], pts[1:]
    piece_tol = tol * (b - a) / (hi - lo)
    pieces = _adaptive_pieces(lambda s: h_inverse(coeffs, s), a, b, piece_tol)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    cum -= cum[np.searchsorted(pts, 0.0)]
    out = cum[np.searchsorted(pts, z_flat)]
    return float(out[0]) if scalar else out.reshape(z_arr.shape)


@dataclass(frozen=True)
class HHatConstants:
    c9: float
    c10: float
    c11: float
    c12: float
    c13: float
    c14: float


def hhat_constants(coeffs):
    """Constants of the three h-inequalities, from their proof chains.

    ``r^2 <= c9 |h(r)|^2 + c10 <= c11 hhat(h(r)) + c12`` and
    ``hhat(r) <= c13 r^2 + c14``.
    """
    dh_, ch = coeffs.delta_h, coeffs.c_h
    g0 = coeffs.h_inv0
    c9 = 2.0 / dh_**2
    c10 = 2.0 * coeffs.h0**2 / dh_**2
    c11 = 4.0 * ch * c9
    c12 = c10 + 4.0 * ch * c9 * ch * g0**2
    # hhat(r) <= r^2/(2 delta_h) + |g0||r| and Young with weight 1/(2 delta_h)
    c13 = 1.0 / dh_
    c14 = g0**2 * dh_ / 2.0
    return HHatConstants(c9, c10, c11, c12, c13, c14)


def check_hhat_inequalities(coeffs, r_samples, slack=1e-9):
    """Check the chained quadratic bounds relating ``r``, ``h(r)`` and ``hhat``.

    Returns three reports (worst margin over the samples): ``square_bound``
    for ``r^2 <= c9 h^2 + c10``, ``hhat_lower_bound`` for
    ``c9 h^2 + c10 <= c11 hhat(h) + c12`` and ``hhat_upper_bound`` for
    ``hhat(r) <= c13 r^2 + c14``.
    """
    r = np.asarray(r_samples, dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise ValueError("r_samples must be finite")
    k = hhat_constants(coeffs)
    hr = coeffs.h(r)
    left = r**2
    middle = k.c9 * hr**2 + k.c10
    right = k.c11 * h_hat(coeffs, hr) + k.c12
    hh = h_hat(coeffs, r)
    upper = k.c13 * r**2 + k.c14

    def worst(lhs, rhs, name):
        i = int(np.argmin(rhs - lhs))
        scale = slack * (1.0 + abs(rhs[i]))
        return EstimateReport(name, lhs[i], rhs[i], slack=scale, details={"r": float(r[i])})

    return [
        worst(left, middle, "square_bound"),
        worst(middle, right, "hhat_lower_bound"),
        worst(hh, upper, "hhat_upper_bound"),
    ]


def is_convex_triple(coeffs, z1, z2, z3, tol=1e-9):
    """Midpoint convexity check of h-hat on an equally spaced triple."""
    vals = h_hat(coeffs, np.array([z1, z2, z3], dtype=float))
    return bool(vals[1] <= 0.5 * (vals[0] + vals[2]) + tol)


__all__ = [
    "CoefficientSet",
    "HHatConstants",
    "REGISTRY",
    "check_hhat_inequalities",
    "get_coefficients",
    "h_hat",
    "h_inverse",
    "hhat_constants",
    "identity",
    "is_convex_triple",
    "linear",
    "trigonometric",
    "sinusoidal",
    "validate_assumptions",
]
