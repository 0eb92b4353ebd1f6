"""Finite-volume solver and numerical witnesses for a nonlinear moisture transport equation.

The equation ``d_t h(v) = d_x(d_x v + b(v) p)`` on ``(0, 1)`` with zero-flux
boundaries is discretized by cell averages and backward Euler. Companion
modules mollify rough pressures, check a priori estimates, measure weak-form
residuals and solve the linear dual problem used in uniqueness arguments.
"""

__version__ = "0.1.0"

from .coefficients import CoefficientSet, get_coefficients, validate_assumptions  # noqa: E402
from .fvm import SemiDiscreteProblem, TimeStepConfig, solve  # noqa: E402
from .grid import GridFunction, SpaceTimeField, UniformGrid, project_cell_averages  # noqa: E402
from .mollifier import MollifierKernel, PressureField, get_pressure, mollify  # noqa: E402
from .reports import EstimateReport  # noqa: E402
from .validation import CoefficientError, NumericalFailure, StepFailure  # noqa: E402

__all__ = [
    "CoefficientError",
    "CoefficientSet",
    "EstimateReport",
    "GridFunction",
    "MollifierKernel",
    "NumericalFailure",
    "PressureField",
    "SemiDiscreteProblem",
    "SpaceTimeField",
    "StepFailure",
    "TimeStepConfig",
    "UniformGrid",
    "get_coefficients",
    "get_pressure",
    "mollify",
    "project_cell_averages",
    "solve",
    "validate_assumptions",
]
