"""Acceptance suite: nine end-to-end criteria, each reported on one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import heat_exact, heat_problem
from moisture_fvm.coefficients import REGISTRY, check_hhat_inequalities, get_coefficients
from moisture_fvm.dual import (
    check_h1_bounds,
    check_maximum_bound,
    contraction_observed,
    generic_dual_fixture,
    h1_quantities,
    mode_fixture,
    picard_solve,
    rough_dual_fixture,
    solve_auxiliary,
    spread_ratio,
)
from moisture_fvm.estimates import PiecewiseLinear, energy_budget, energy_constants, gn_inequality_check, uniform_bounds
from moisture_fvm.fvm import SemiDiscreteProblem, TimeStepConfig, max_mass_drift, solve
from moisture_fvm.grid import SpaceTimeField, UniformGrid, project_cell_averages, spacetime_l2
from moisture_fvm.harness import (
    INITIAL_DATA,
    ExperimentConfig,
    Fixture,
    observed_orders,
    run_full_pipeline,
    run_refinement_study,
    solve_sweep,
    time_reversed,
)
from moisture_fvm.mollifier import (
    PRESSURES,
    check_l2_nonexpansive,
    check_smoothness,
    get_pressure,
    l2_distance,
    mollify,
)
from moisture_fvm.weak_residual import residual_sweep

RESULTS = {}

GENERIC = dict(coefficients="sinusoidal", pressure="sine-product", initial="mixed", horizon=0.1, dt_factor=1.0, dual=False)
DELTAS = [0.1, 0.05, 0.025]


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[number] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def generic_pressures():
    """Mollified generic pressures shared by the sweeps of criteria 4 and 5."""
    fx = Fixture(ExperimentConfig(**GENERIC, levels=[16], deltas=DELTAS))
    return {d: fx.smoothed(d) for d in DELTAS}


def _fixture(generic_pressures, levels):
    fx = Fixture(ExperimentConfig(**GENERIC, levels=levels, deltas=DELTAS))
    fx._smoothed.update(generic_pressures)
    return fx


@pytest.fixture(scope="module")
def shipped_runs():
    """Every coefficient set against every pressure fixture, plus every initial datum."""
    T, n = 0.05, 32
    grid = UniformGrid(n)
    cfg = TimeStepConfig(dt=1.0 / n**2)
    pressures = {}
    for name in PRESSURES:
        raw = get_pressure(name, T=T)
        pressures[name] = raw if raw.sup_abs == 0 else mollify(raw, 0.1)
    pressures["rough-raw"] = get_pressure("rough", T=T)
    runs = {}

    def run(coeffs, pname, initial):
        v0 = project_cell_averages(INITIAL_DATA[initial], grid)
        prob = SemiDiscreteProblem(get_coefficients(coeffs), grid, pressures[pname], v0, T)
        traj = solve(prob, cfg)
        rho = np.array([prob.pressure_cells(t) for t in traj.times])
        runs[(coeffs, pname, initial)] = (prob, traj, rho)

    start = time.perf_counter()
    for coeffs in REGISTRY:
        for pname in pressures:
            run(coeffs, pname, "mixed")
    for initial in INITIAL_DATA:
        run("sinusoidal", "sine-product", initial)
    return runs, time.perf_counter() - start


class TestAcceptance:
    def test_1_heat_oracle(self):
        start = time.perf_counter()
        errs = []
        for n in (16, 32, 64, 128):
            traj = solve(heat_problem(n, T=0.1), TimeStepConfig(dt=0.25 / n**2))
            errs.append(spacetime_l2(SpaceTimeField(traj.grid, traj.times, traj.values - heat_exact(traj))))
        elapsed = time.perf_counter() - start
        orders = observed_orders(errs)
        ok = all(1.7 <= o <= 2.3 for o in orders) and elapsed < 10.0
        assert record(1, ok, f"orders {', '.join(f'{o:.3f}' for o in orders)}; {elapsed:.1f}s")

    def test_2_mass_conservation(self, shipped_runs):
        runs, elapsed = shipped_runs
        drifts = {key: max_mass_drift(traj) for key, (_, traj, _) in runs.items()}
        worst = max(drifts, key=drifts.get)
        ok = drifts[worst] <= 1e-8 and elapsed < 30.0
        assert record(2, ok, f"{len(runs)} fixtures, max drift {drifts[worst]:.2e} at {worst}; {elapsed:.1f}s")

    def test_3_energy_budget(self, shipped_runs):
        runs, _ = shipped_runs
        genuine = [energy_budget(traj, rho, prob.coeffs) for prob, traj, rho in runs.values()]
        heat = solve(heat_problem(32, T=0.1), TimeStepConfig(dt=1.0 / 32**2))
        zero = np.zeros_like(heat.values)
        genuine.append(energy_budget(heat, zero, get_coefficients("identity")))
        fake = energy_budget(time_reversed(heat), zero, get_coefficients("identity"))
        ok = all(r.passed for r in genuine) and not fake.passed
        worst = min(r.margin for r in genuine)
        assert record(3, ok, f"{len(genuine)} genuine pass (min margin {worst:.3e}); reversed fails: {not fake.passed}")

    def test_4_uniform_bounds(self, generic_pressures):
        fx = _fixture(generic_pressures, [16, 32, 64, 128])
        c15 = energy_constants(fx.coeffs, fx.pressure_l2, fx.h_v0_l2).c15
        margins = []
        for d in DELTAS:
            for n in fx.cfg.levels:
                run = fx.solve(n, d)
                margins += [r.margin for r in uniform_bounds(run.traj, fx.coeffs, fx.pressure_l2, c15=c15)]
        ok = len(margins) == 48 and min(margins) >= 0
        assert record(4, ok, f"C15 {c15:.4g}, 12 runs x 4 quantities, min margin {min(margins):.4g}")

    def test_5_refinement(self, generic_pressures):
        start = time.perf_counter()
        fx = _fixture(generic_pressures, [32, 64, 128, 256])
        cfg = fx.cfg
        table = run_refinement_study(cfg, solve_sweep(cfg, fx), fx)
        elapsed = time.perf_counter() - start
        parts = []
        ok = True
        for d in DELTAS:
            inner = table.column("error", lambda r, d=d: r["study"] == "inner" and r["delta"] == d)
            ok &= len(inner) == 3 and all(b < a for a, b in zip(inner[:-1], inner[1:]))
            parts.append(f"inner[{d}] " + "/".join(f"{e:.2e}" for e in inner))
        outer = table.column("error", lambda r: r["study"] == "outer")
        ok &= len(outer) == 2 and outer[1] < outer[0] and elapsed < 300.0
        parts.append("outer " + "/".join(f"{e:.2e}" for e in outer))
        assert record(5, ok, "; ".join(parts) + f"; {elapsed:.0f}s")

    def test_6_weak_residual(self):
        T = 0.1
        rho = mollify(get_pressure("sine-product", T=T), 0.1)

        def generic(n):
            grid = UniformGrid(n)
            v0 = project_cell_averages(INITIAL_DATA["mixed"], grid)
            return SemiDiscreteProblem(get_coefficients("sinusoidal"), grid, rho, v0, T)

        def constant(n):
            grid = UniformGrid(n)
            v0 = project_cell_averages(INITIAL_DATA["constant"], grid)
            return SemiDiscreteProblem(get_coefficients("sinusoidal"), grid, get_pressure("zero", T=T), v0, T)

        levels = [16, 32, 64, 128]
        heat_ratios = residual_sweep(heat_problem, levels).column("ratio")[1:]
        generic_ratios = residual_sweep(generic, levels).column("ratio")[1:]
        const_max = max(residual_sweep(constant, levels).column("max_residual"))
        ok = min(heat_ratios + generic_ratios) >= 1.5 and const_max <= 1e-8
        fmt = lambda rs: ",".join(f"{r:.2f}" for r in rs)  # noqa: E731
        assert record(6, ok, f"heat ratios {fmt(heat_ratios)}; generic {fmt(generic_ratios)}; constant {const_max:.1e}")

    def test_7_dual_solver(self):
        def g(t):
            return np.sin(np.pi * t) ** 2

        grid = UniformGrid(128)
        aux = solve_auxiliary(mode_fixture(g), None, grid, 1e-4)
        modes = project_cell_averages(lambda x: np.cos(np.pi * x), grid).values
        duhamel = 0.0
        for k in range(0, len(aux), 100):
            t = aux.times[k]
            amp = quad(lambda s: np.exp(-np.pi**2 * (t - s)) * g(s), 0.0, t)[0]
            duhamel = max(duhamel, float(np.abs(aux.values[k] - amp * modes).max()))
        ok_a = duhamel <= 1e-4

        duals = generic_dual_fixture()
        state = picard_solve(duals, grid, 1e-3, tol=1e-8, max_iter=50)
        hist = state.picard_history
        ok_b = len(hist) <= 50 and hist[-1] <= 1e-8 and contraction_observed(hist)

        sweep = [picard_solve(rough_dual_fixture(e), UniformGrid(64), 2e-3) for e in DELTAS]
        bounds = [check_maximum_bound(state, duals.xi_sup)] + [check_maximum_bound(s, 1.0) for s in sweep]
        ok_c = all(r.passed for r in bounds)

        quantities = np.array([h1_quantities(s) for s in sweep])
        spreads = [spread_ratio(col) for col in quantities.T]
        ok_d = max(spreads) < 2.0 and all(r.passed for r in check_h1_bounds(sweep))
        detail = (
            f"(a) Duhamel {duhamel:.1e}; (b) {len(hist)} iterations, last increment ratio "
            f"{hist[-1] / hist[-2]:.2f}; (c) max bound {'ok' if ok_c else 'violated'}; "
            f"(d) spreads {', '.join(f'{s:.2f}' for s in spreads)}"
        )
        assert record(7, ok_a and ok_b and ok_c and ok_d, detail)

    def test_8_inequalities(self):
        rng = np.random.default_rng(2024)
        knots = np.linspace(0.0, 1.0, 32)
        gn = [gn_inequality_check(PiecewiseLinear(knots, rng.normal(size=32) * rng.uniform(0.01, 100))) for _ in range(1000)]
        samples = np.linspace(-50.0, 50.0, 10**4)
        hin = [r for name in REGISTRY for r in check_hhat_inequalities(get_coefficients(name), samples)]
        nonexp = []
        for name in PRESSURES:
            p = get_pressure(name, T=1.0)
            nonexp.append(check_l2_nonexpansive(p, mollify(p, 0.05)))
        deltas = [0.1, 0.05, 0.025, 0.0125]
        conv = {}
        for name in ("sine-bubble", "sine-product", "constant"):
            p = get_pressure(name, T=1.0)
            conv[name] = [l2_distance(mollify(p, d), p) for d in deltas]
        monotone = all(b <= 1.05 * a for errs in conv.values() for a, b in zip(errs[:-1], errs[1:]))
        lipschitz_ok = conv["sine-bubble"][-1] < 1e-2
        smooth = check_smoothness(mollify(get_pressure("rough", T=1.0), 0.05))
        ok = (
            all(r.passed for r in gn)
            and all(r.passed for r in hin)
            and all(r.passed for r in nonexp)
            and monotone
            and lipschitz_ok
            and smooth.passed
        )
        detail = (
            f"GN {sum(r.passed for r in gn)}/1000; h-chain {sum(r.passed for r in hin)}/{len(hin)}; "
            f"L2 non-expansive {sum(r.passed for r in nonexp)}/{len(nonexp)}; "
            f"sine-bubble errors {'/'.join(f'{e:.1e}' for e in conv['sine-bubble'])}; smoothness {smooth.passed}"
        )
        assert record(8, ok, detail)

    def test_9_determinism(self, tmp_path):
        cfg = ExperimentConfig()
        status_a, _ = run_full_pipeline(cfg, tmp_path / "a")
        status_b, _ = run_full_pipeline(cfg, tmp_path / "b")
        files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
        same = [(tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files]
        ok = len(files) == 6 and all(same) and status_a == status_b
        assert record(9, ok, f"{sum(same)}/{len(files)} CSV files byte-identical")


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q"])
    for key in sorted(RESULTS):
        print(RESULTS[key])
    sys.exit(code)
