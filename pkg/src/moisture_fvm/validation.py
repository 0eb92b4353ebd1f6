"""Input validation helpers and the package's exception types."""

import numbers

import numpy as np


class NumericalFailure(RuntimeError):
    """An iterative or quadrature routine did not reach its tolerance."""

    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history


class StepFailure(NumericalFailure):
    """Newton iteration of an implicit time step diverged or hit its cap."""

    def __init__(self, message, t=None, dt=None, residual=None, history=None):
        super().__init__(message, residual=residual, history=history)
        self.t = t
        self.dt = dt


class CoefficientError(ValueError):
    """A coefficient pair evaluated to a non-finite value or inconsistent derivatives."""


def check_positive(value, name, allow_zero=False):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = "non-negative" if allow_zero else "positive"
        raise ValueError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_finite_array(values, name, ndim=None, length=None):
    """Return ``values`` as a float array after checking shape and finiteness."""
    arr = np.asarray(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"{name} has a non-finite entry at index {tuple(int(i) for i in bad)}")
    return arr


def frozen(arr):
    """Copy ``arr`` into a read-only float array."""
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out
