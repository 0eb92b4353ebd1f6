"""Experiment orchestration: configuration, refinement studies and the full pipeline.

A run is identified by ``(delta, n)``: the pressure mollified at radius
``delta`` (``None`` for the raw field) and an ``n``-cell grid. All runs of a
study share one time-step rule, ``dt = dt_factor * dx**2`` rounded down so
that every level's step count is a fixed multiple of the coarsest one. The
frames of neighbouring levels therefore line up exactly.
"""

import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import check_hhat_inequalities, get_coefficients
from .dual import (
    DualCoefficients,
    _bump_source,
    build_sigma_q,
    check_maximum_bound,
    contraction_observed,
    field_from_samples,
    picard_history_to_csv,
    picard_solve,
    smoothed_dual_coefficients,
)
from .estimates import (
    PiecewiseLinear,
    dual_norm_bound,
    energy_budget,
    energy_constants,
    gn_inequality_check,
    uniform_bounds,
)
from .fvm import SemiDiscreteProblem, TimeStepConfig, max_mass_drift, runlog_to_csv, solve
from .grid import GridFunction, SpaceTimeField, UniformGrid, project_cell_averages, refine_values, spacetime_to_csv
from .mollifier import cylinder_l2, get_pressure, mollify
from .reports import EstimateReport, reports_to_csv
from .tables import ConvergenceTable, adjacent_ratios, decreasing
from .weak_residual import RESIDUAL_COLUMNS, default_family, max_residual

# initial data fixtures


def _cos(x):
    return np.cos(np.pi * np.asarray(x))


def _constant(x, value=0.5):
    return np.full(np.shape(x), value)


def _mixed(x):
    x = np.asarray(x)
    return 1.0 + np.cos(np.pi * x) + 0.5 * np.sin(3 * np.pi * x)


def _step(x):
    return np.where(np.asarray(x) < 0.5, 1.0, -0.5)


INITIAL_DATA = {"cos": _cos, "constant": _constant, "mixed": _mixed, "step": _step}

MASS_TOLERANCE = 1e-8


def get_initial(name):
    try:
        return INITIAL_DATA[name]
    except KeyError:
        raise ValueError(f"unknown initial data {name!r}; choose from {sorted(INITIAL_DATA)}") from None


@dataclass
class ExperimentConfig:
    """Settings of a study; serialized as a flat JSON object with these keys.

    ``deltas`` may contain ``null`` for an unmollified pressure. ``level_cap``
    drops grid levels above it.
    """

    coefficients: str = "sinusoidal"
    pressure: str = "sine-product"
    initial: str = "mixed"
    horizon: float = 0.1
    levels: list = field(default_factory=lambda: [16, 32, 64])
    deltas: list = field(default_factory=lambda: [0.1, 0.05])
    dt_factor: float = 1.0
    newton_tol: float = 1e-10
    mollifier_mode: str = "radial"
    residual_k_max: int = 3
    dual: bool = True
    dual_n: int = 64
    dual_dt: float = 2e-3
    picard_tol: float = 1e-8
    picard_max_iter: int = 50
    output_dir: str = "out"
    seed: int = 0
    level_cap: int = 1024
    workers: int = 1

    def __post_init__(self):
        self.levels = [int(n) for n in self.levels if int(n) <= self.level_cap]
        if not self.levels:
            raise ValueError("no grid levels at or below the level cap")
        if any(b <= a for a, b in zip(self.levels[:-1], self.levels[1:])) or self.levels[0] < 2:
            raise ValueError("levels must be increasing integers >= 2")
        if any(n % self.levels[0] for n in self.levels):
            raise ValueError("every level must be a multiple of the coarsest level")
        if not self.deltas:
            raise ValueError("deltas must be nonempty (use null for the raw pressure)")
        self.deltas = [None if d is None else float(d) for d in self.deltas]
        if any(d is not None and d <= 0 for d in self.deltas):
            raise ValueError("deltas must be positive")
        if int(self.workers) < 1:
            raise ValueError("workers must be >= 1")
        self.workers = int(self.workers)
        if not (self.horizon > 0 and self.dt_factor > 0 and self.newton_tol > 0):
            raise ValueError("horizon, dt_factor and newton_tol must be positive")
        get_coefficients(self.coefficients)
        get_pressure(self.pressure, T=self.horizon)
        get_initial(self.initial)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def with_updates(self, **kw):
        data = self.to_dict()
        data.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig.from_dict(data)


@dataclass
class Run:
    delta: object
    n: int
    problem: SemiDiscreteProblem
    traj: SpaceTimeField

    @property
    def tag(self):
        d = "raw" if self.delta is None else f"{self.delta:g}"
        return f"n={self.n},delta={d}"

    def pressure_frames(self):
        return np.array([self.problem.pressure_cells(t) for t in self.traj.times])


class Fixture:
    """Coefficients, raw pressure and initial data named by a config, with caches."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.coeffs = get_coefficients(cfg.coefficients)
        self.pressure = get_pressure(cfg.pressure, T=cfg.horizon)
        self.v0 = get_initial(cfg.initial)
        self._smoothed = {}

    def smoothed(self, delta):
        if delta is None or self.pressure.sup_abs == 0.0:
            return self.pressure
        if delta not in self._smoothed:
            self._smoothed[delta] = mollify(self.pressure, delta, mode=self.cfg.mollifier_mode)
        return self._smoothed[delta]

    def problem(self, n, delta):
        grid = UniformGrid(n)
        return SemiDiscreteProblem(
            self.coeffs, grid, self.smoothed(delta), project_cell_averages(self.v0, grid), self.cfg.horizon
        )

    def steps(self, n):
        """Step count at level ``n``: the coarsest count times the squared level ratio."""
        n0 = self.cfg.levels[0]
        base = max(1, math.ceil(self.cfg.horizon / (self.cfg.dt_factor / n0**2) * (1 - 1e-12)))
        return base * (n // n0) ** 2

    def solve(self, n, delta):
        problem = self.problem(n, delta)
        dt = self.cfg.horizon / self.steps(n)
        traj = solve(problem, TimeStepConfig(dt=dt, newton_tol=self.cfg.newton_tol))
        return Run(delta, n, problem, traj)

    def exact(self, grid, times):
        """Exact cell averages when the fixture is the linear heat equation with a cosine mode."""
        if self.cfg.coefficients == "identity" and self.pressure.sup_abs == 0.0 and self.cfg.initial == "cos":
            v0 = project_cell_averages(self.v0, grid).values
            return np.exp(-np.pi**2 * np.asarray(times))[:, None] * v0[None, :]
        return None

    @property
    def pressure_l2(self):
        return cylinder_l2(self.pressure, 400, 400)

    @property
    def h_v0_l2(self):
        x, w = UniformGrid(2048).quadrature_nodes(8)
        return float(np.sqrt(np.sum(w * self.coeffs.h(self.v0(x)) ** 2)))


def solve_sweep(cfg, fixture=None):
    """Solve every ``(delta, n)`` pair of the config; returns ``{(delta, n): Run}``.

    With ``cfg.workers > 1`` the pairs run on a thread pool. Mollified
    pressures are built first so the workers share no mutable state beyond
    idempotent caches, and results are keyed, so the output does not depend
    on scheduling.
    """
    fixture = fixture or Fixture(cfg)
    keys = [(d, n) for d in cfg.deltas for n in cfg.levels]
    for d in cfg.deltas:
        fixture.smoothed(d)
    if cfg.workers <= 1:
        return {(d, n): fixture.solve(n, d) for d, n in keys}
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {key: pool.submit(fixture.solve, key[1], key[0]) for key in keys}
        return {key: futures[key].result() for key in keys}


def _l2q_difference(coarse, fine):
    """``L^2`` distance on the space-time cylinder between runs on nested grids and time lattices."""
    r = fine.grid.n // coarse.grid.n
    stride = (len(fine) - 1) // (len(coarse) - 1)
    fv = fine.values[::stride]
    if fv.shape[0] != len(coarse) or not np.allclose(fine.times[::stride], coarse.times, rtol=0, atol=1e-12):
        raise ValueError("time lattices are not nested")
    # restrict the fine field to coarse frames, refine the coarse field in space
    diff = fv - refine_values(coarse.values, r)
    sq = fine.grid.dx * np.sum(diff**2, axis=1)
    return float(np.sqrt(np.trapezoid(sq, coarse.times)))


REFINE_COLUMNS = ("study", "level", "n", "delta", "dt", "error", "ratio")


def run_refinement_study(cfg, runs=None, fixture=None, slack=0.1, floor=1e-10):
    """Inner (grid) and outer (mollifier) Cauchy studies plus exact errors when known.

    Rows of study ``inner`` hold ``||v(2n) - v(n)||`` at fixed delta; ``inner_ref``
    the distance to the finest level; ``outer`` the distance between
    consecutive deltas on the finest grid; ``exact`` the error against an exact
    solution when the fixture has one. Verdicts require each sequence to
    decrease within ``slack`` relative growth, or to stay below ``floor``.
    """
    fixture = fixture or Fixture(cfg)
    runs = runs if runs is not None else solve_sweep(cfg, fixture)
    table = ConvergenceTable(REFINE_COLUMNS)
    levels, deltas = cfg.levels, cfg.deltas

    def verdict(values):
        return all(v <= floor for v in values) or decreasing(values, slack)

    for d in deltas:
        diffs = [_l2q_difference(runs[(d, a)].traj, runs[(d, b)].traj) for a, b in zip(levels[:-1], levels[1:])]
        for k, (err, ratio) in enumerate(zip(diffs, adjacent_ratios(diffs))):
            n = levels[k]
            table.add(study="inner", level=k, n=n, delta=d, dt=cfg.horizon / fixture.steps(n), error=err, ratio=ratio)
        table.verdicts[f"inner_decreasing[delta={d}]"] = verdict(diffs)
        finest = runs[(d, levels[-1])].traj
        refs = [_l2q_difference(runs[(d, n)].traj, finest) for n in levels[:-1]]
        for k, (err, ratio) in enumerate(zip(refs, adjacent_ratios(refs))):
            n = levels[k]
            table.add(study="inner_ref", level=k, n=n, delta=d, dt=cfg.horizon / fixture.steps(n), error=err, ratio=ratio)
        exact_errs = []
        for n in levels:
            traj = runs[(d, n)].traj
            ex = fixture.exact(traj.grid, traj.times)
            if ex is None:
                break
            sq = traj.grid.dx * np.sum((traj.values - ex) ** 2, axis=1)
            exact_errs.append(float(np.sqrt(np.trapezoid(sq, traj.times))))
        for k, (err, ratio) in enumerate(zip(exact_errs, adjacent_ratios(exact_errs))):
            n = levels[k]
            table.add(study="exact", level=k, n=n, delta=d, dt=cfg.horizon / fixture.steps(n), error=err, ratio=ratio)
        if exact_errs:
            table.verdicts[f"exact_decreasing[delta={d}]"] = verdict(exact_errs)
    outer_deltas = sorted(deltas, key=lambda d: math.inf if d is None else -d)
    outer_deltas = [d for d in outer_deltas if d is not None] + [d for d in outer_deltas if d is None]
    if len(outer_deltas) > 1:
        n = levels[-1]
        outer = [
            _l2q_difference(runs[(a, n)].traj, runs[(b, n)].traj) for a, b in zip(outer_deltas[:-1], outer_deltas[1:])
        ]
        for k, (err, ratio) in enumerate(zip(outer, adjacent_ratios(outer))):
            table.add(study="outer", level=k, n=n, delta=outer_deltas[k + 1], dt=cfg.horizon / fixture.steps(n), error=err, ratio=ratio)
        table.verdicts["outer_decreasing"] = verdict(outer)
    return table


def observed_orders(errors, factor=2.0):
    """``log_factor`` of adjacent error ratios."""
    return [math.log(a / b, factor) for a, b in zip(errors[:-1], errors[1:])]


def time_reversed(traj):
    """The trajectory played backwards on the same time lattice (an energy-increasing fake)."""
    return SpaceTimeField(traj.grid, traj.times, traj.values[::-1].copy())


def estimate_reports(cfg, runs, fixture, adversarial=False, rng=None):
    """Mass, energy, uniform, dual-norm, h-inequality and Gagliardo-Nirenberg reports."""
    coeffs = fixture.coeffs
    p_l2 = fixture.pressure_l2
    consts = energy_constants(coeffs, p_l2, fixture.h_v0_l2)
    family = default_family(cfg.horizon, cfg.residual_k_max)
    out = []
    for run in runs.values():
        rho = run.pressure_frames()
        drift = max_mass_drift(run.traj)
        out.append(EstimateReport(f"mass_drift[{run.tag}]", drift, MASS_TOLERANCE))
        rep = energy_budget(run.traj, rho, coeffs)
        out.append(EstimateReport(f"energy_budget[{run.tag}]", rep.lhs, rep.rhs, rep.slack, rep.details))
        for r in uniform_bounds(run.traj, coeffs, p_l2, c15=consts.c15):
            out.append(EstimateReport(f"{r.name}[{run.tag}]", r.lhs, r.rhs, r.slack))
        for r in dual_norm_bound(run.traj, rho, coeffs, family, p_l2, consts.c15):
            out.append(EstimateReport(f"{r.name}[{run.tag}]", r.lhs, r.rhs, r.slack, r.details))
        out.append(gn_inequality_check(GridFunction(run.traj.grid, run.traj.values[-1]), f"gagliardo_nirenberg[{run.tag}]"))
    if adversarial:
        run = runs[(cfg.deltas[0], cfg.levels[-1])]
        fake = time_reversed(run.traj)
        rep = energy_budget(fake, run.pressure_frames()[::-1], coeffs)
        out.append(EstimateReport(f"energy_budget[adversarial,{run.tag}]", rep.lhs, rep.rhs, rep.slack, rep.details))
    samples = np.linspace(-50.0, 50.0, 10001)
    out.extend(
        EstimateReport(f"{r.name}[{coeffs.name}]", r.lhs, r.rhs, r.slack) for r in check_hhat_inequalities(coeffs, samples)
    )
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    for k in range(20):
        u = PiecewiseLinear(np.linspace(0.0, 1.0, 33), rng.normal(size=33))
        out.append(gn_inequality_check(u, f"gagliardo_nirenberg[random{k}]"))
    return out


def residual_table(cfg, runs, fixture):
    """Largest family residual per level at the first delta."""
    family = default_family(cfg.horizon, cfg.residual_k_max)
    table = ConvergenceTable(RESIDUAL_COLUMNS)
    d = cfg.deltas[0]
    values = []
    for level, n in enumerate(cfg.levels):
        run = runs[(d, n)]
        values.append(max_residual(run.traj, run.pressure_frames(), fixture.coeffs, family))
        table.add(level=level, n=n, dt=cfg.horizon / fixture.steps(n), max_residual=values[-1])
    for row, ratio in zip(table.rows, adjacent_ratios(values)):
        row["ratio"] = ratio
    table.verdicts["residual_nonincreasing"] = all(v <= 1e-8 for v in values) or decreasing(values, 0.1)
    return table


def dual_stage(cfg, fixture, base_run):
    """Dual problem built from two solver runs that differ in their initial data.

    Returns ``(state, reports)``.
    """
    perturbed = Fixture(cfg)
    v0 = fixture.v0
    perturbed.v0 = lambda x: v0(x) + 0.25 * np.cos(2 * np.pi * np.asarray(x))
    other = perturbed.solve(base_run.n, base_run.delta)
    coeffs = fixture.coeffs
    z1 = base_run.traj.map(coeffs.h)
    z2 = other.traj.map(coeffs.h)
    sq = build_sigma_q(z1, z2, coeffs)
    p_vals = base_run.pressure_frames()
    phi_raw = field_from_samples(
        SpaceTimeField(base_run.traj.grid, base_run.traj.times, sq.q.values * p_vals), "phi_raw"
    )
    sigma_raw = field_from_samples(sq.sigma, "sigma_raw", fill_value=1.0)
    eps = cfg.deltas[0] if cfg.deltas[0] is not None else 0.05
    xi = _bump_source(cfg.horizon)
    duals = smoothed_dual_coefficients(
        sigma_raw, phi_raw, xi, eps, sq.delta_sigma, sq.c_sigma, sq.c_q, xi.sup_abs, panels=2
    )
    grid = UniformGrid(cfg.dual_n)
    state = picard_solve(duals, grid, cfg.dual_dt, cfg.picard_tol, cfg.picard_max_iter)
    reports = [EstimateReport(f"{r.name}[sigma_q]", r.lhs, r.rhs, r.slack) for r in sq.reports]
    reports += duals.check_bounds(grid, state.zeta.times)
    reports.append(check_maximum_bound(state, duals.xi_sup))
    return state, reports


def _versions():
    import scipy
    import sklearn

    return {
        "artifact": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
    }


STAGES = ("solve", "estimates", "residual", "refine", "dual")


def run_full_pipeline(cfg, out_dir=None, stages=STAGES, debug_adversarial=False):
    """Run the selected stages, write their CSV files and a manifest.

    Returns ``(exit_status, manifest)``. The status is 1 when any report or
    verdict fails or a stage raises, 0 otherwise. A failing stage is recorded
    and the remaining stages still run.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixture = Fixture(cfg)
    manifest = {
        "config": cfg.to_dict(),
        "versions": _versions(),
        "stages": {},
        "timings": {},
        "verdicts": {},
        "files": [],
        "debug_adversarial": bool(debug_adversarial),
    }
    reports = []
    runs = None
    failed = False

    def record(name, fn):
        nonlocal failed
        start = time.perf_counter()
        try:
            fn()
            manifest["stages"][name] = "ok"
        except Exception as exc:  # keep going to gather diagnostics
            manifest["stages"][name] = f"error: {type(exc).__name__}: {exc}"
            failed = True
        manifest["timings"][name] = round(time.perf_counter() - start, 3)

    def write(name, text):
        (out / name).write_text(text)
        manifest["files"].append(name)

    def need_runs():
        nonlocal runs
        if runs is None:
            runs = solve_sweep(cfg, fixture)
        return runs

    def do_solve():
        run = need_runs()[(cfg.deltas[0], cfg.levels[-1])]
        write("trajectory.csv", spacetime_to_csv(run.traj))
        write("runlog.csv", runlog_to_csv(run.traj.runlog))

    def do_estimates():
        reports.extend(estimate_reports(cfg, need_runs(), fixture, adversarial=debug_adversarial))

    def do_residual():
        table = residual_table(cfg, need_runs(), fixture)
        manifest["verdicts"].update(table.verdicts)
        write("residuals.csv", table.to_csv())

    def do_refine():
        table = run_refinement_study(cfg, need_runs(), fixture)
        manifest["verdicts"].update(table.verdicts)
        write("convergence.csv", table.to_csv())

    def do_dual():
        state, dual_reports = dual_stage(cfg, fixture, need_runs()[(cfg.deltas[0], cfg.levels[0])])
        reports.extend(dual_reports)
        manifest["verdicts"]["picard_contraction"] = contraction_observed(state.picard_history)
        write("dual_iters.csv", picard_history_to_csv(state.picard_history))

    actions = {
        "solve": do_solve,
        "estimates": do_estimates,
        "residual": do_residual,
        "refine": do_refine,
        "dual": do_dual,
    }
    for name in STAGES:
        if name in stages and (name != "dual" or cfg.dual or stages != STAGES):
            record(name, actions[name])
    if reports:
        write("estimates.csv", reports_to_csv(reports))
    failing = [r.name for r in reports if not r.passed]
    bad_verdicts = [k for k, v in manifest["verdicts"].items() if not v]
    manifest["reports"] = {"total": len(reports), "failed": failing}
    manifest["failed_verdicts"] = bad_verdicts
    status = 1 if (failing or bad_verdicts or failed) else 0
    manifest["exit_status"] = status
    manifest["files"].append("manifest.json")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return status, manifest
