import json

import numpy as np
import pytest

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
from moisture_fvm.tables import ConvergenceTable, adjacent_ratios, decreasing

SMALL = dict(levels=[8, 16], deltas=[0.2], horizon=0.15, dual_n=16, dual_dt=5e-3)


def _cfg(**kw):
    return ExperimentConfig.from_dict({**SMALL, **kw})


class TestConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        assert cfg.levels == sorted(cfg.levels)

    @pytest.mark.parametrize(
        "bad",
        [
            {"levels": []},
            {"levels": [16, 8]},
            {"levels": [8, 12]},
            {"horizon": 0.0},
            {"dt_factor": -1.0},
            {"deltas": [0.0]},
            {"pressure": "nope"},
            {"coefficients": "nope"},
            {"initial": "nope"},
            {"unknown_key": 1},
            {"workers": 0},
        ],
    )
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            _cfg(**bad)

    def test_level_cap(self):
        assert _cfg(levels=[8, 16, 32], level_cap=16).levels == [8, 16]
        with pytest.raises(ValueError):
            _cfg(levels=[8, 16], level_cap=4)

    def test_json_roundtrip(self, tmp_path):
        cfg = _cfg(seed=3, deltas=[0.2, None])
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.from_json(path) == cfg

    def test_initial_registry(self):
        x = np.linspace(0, 1, 5)
        for fn in INITIAL_DATA.values():
            assert np.all(np.isfinite(fn(x)))


class TestSteps:
    def test_nested_lattices(self):
        cfg = _cfg(levels=[8, 16, 32], dt_factor=1.0)
        fx = Fixture(cfg)
        assert fx.steps(16) == 4 * fx.steps(8) and fx.steps(32) == 16 * fx.steps(8)
        for n in (8, 16, 32):
            assert cfg.horizon / fx.steps(n) <= 1.0 / n**2


class TestRefinement:
    def test_heat_exact_order(self):
        cfg = _cfg(coefficients="identity", pressure="zero", initial="cos", levels=[16, 32, 64, 128], horizon=0.1, dt_factor=0.25)
        table = run_refinement_study(cfg)
        errs = table.column("error", lambda r: r["study"] == "exact")
        orders = observed_orders(errs)
        assert len(orders) == 3 and all(1.7 <= o <= 2.3 for o in orders)

    def test_constant_differences(self):
        cfg = _cfg(pressure="zero", initial="constant", levels=[8, 16, 32], deltas=[0.2, 0.1])
        table = run_refinement_study(cfg)
        assert max(table.column("error")) <= 1e-10
        assert table.passed

    def test_generic_decreasing(self):
        cfg = _cfg(levels=[8, 16, 32, 64], horizon=0.05)
        table = run_refinement_study(cfg)
        inner = table.column("error", lambda r: r["study"] == "inner")
        assert all(b < a for a, b in zip(inner[:-1], inner[1:]))
        assert table.passed

    def test_columns_and_ratios(self):
        table = run_refinement_study(_cfg(deltas=[0.2, 0.1]))
        text = table.to_csv()
        assert text.splitlines()[0] == "study,level,n,delta,dt,error,ratio"
        outer = [r for r in table.rows if r["study"] == "outer"]
        assert len(outer) == 1 and outer[0]["n"] == 16

    def test_workers_identical(self):
        a = solve_sweep(_cfg(deltas=[0.2, 0.1]))
        b = solve_sweep(_cfg(deltas=[0.2, 0.1], workers=3))
        for key in a:
            np.testing.assert_array_equal(a[key].traj.values, b[key].traj.values)


class TestPipeline:
    def test_constant_all_pass(self, tmp_path):
        cfg = _cfg(pressure="zero", initial="constant")
        status, manifest = run_full_pipeline(cfg, tmp_path)
        assert status == 0, manifest
        for name in ("trajectory.csv", "runlog.csv", "estimates.csv", "residuals.csv", "convergence.csv", "dual_iters.csv"):
            assert (tmp_path / name).exists()
        assert json.loads((tmp_path / "manifest.json").read_text()) == json.loads(json.dumps(manifest, default=str))

    def test_adversarial_fails(self, tmp_path):
        status, manifest = run_full_pipeline(_cfg(), tmp_path, stages=("estimates",), debug_adversarial=True)
        assert status == 1
        assert any("adversarial" in name for name in manifest["reports"]["failed"])

    def test_stage_error_recorded(self, tmp_path, monkeypatch):
        import moisture_fvm.harness as h

        def boom(*a, **k):
            raise RuntimeError("boom")

        monkeypatch.setattr(h, "residual_table", boom)
        status, manifest = run_full_pipeline(_cfg(), tmp_path, stages=("solve", "residual"))
        assert status == 1
        assert manifest["stages"]["residual"].startswith("error")
        assert manifest["stages"]["solve"] == "ok"

    def test_deterministic(self, tmp_path):
        cfg = _cfg()
        run_full_pipeline(cfg, tmp_path / "a")
        run_full_pipeline(cfg, tmp_path / "b")
        for f in sorted((tmp_path / "a").glob("*.csv")):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_time_reversed(self):
        run = solve_sweep(_cfg(levels=[8]))[(0.2, 8)]
        rev = time_reversed(run.traj)
        np.testing.assert_array_equal(rev.values[0], run.traj.values[-1])


class TestTables:
    def test_table(self):
        t = ConvergenceTable(("a", "b"))
        t.add(a=1, b=2.5)
        with pytest.raises(KeyError):
            t.add(c=1)
        assert t.to_csv() == "a,b\n1,2.5\n"
        t.verdicts["x"] = False
        assert not t.passed

    def test_helpers(self):
        assert adjacent_ratios([4.0, 2.0, 0.0]) == [None, 2.0, None]
        assert decreasing([3, 2, 1]) and not decreasing([1, 1.05]) and decreasing([1, 1.05], 0.1)
