import json
import subprocess
import sys

import pytest

from moisture_fvm.cli import build_parser, main

SMALL = {"levels": [8, 16], "deltas": [0.2], "horizon": 0.15, "dual_n": 16, "dual_dt": 5e-3}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL))
    return path


class TestCli:
    def test_parser(self):
        args = build_parser().parse_args(["refine", "--level-cap", "64", "--seed", "5"])
        assert args.command == "refine" and args.level_cap == 64 and args.seed == 5

    @pytest.mark.parametrize(
        "command,files",
        [
            ("solve", {"trajectory.csv", "runlog.csv"}),
            ("refine", {"convergence.csv"}),
            ("estimates", {"estimates.csv"}),
            ("residual", {"residuals.csv"}),
            ("dual", {"dual_iters.csv", "estimates.csv"}),
        ],
    )
    def test_subcommands(self, tmp_path, config, command, files):
        out = tmp_path / "out"
        assert main([command, "--config", str(config), "--out", str(out)]) == 0
        assert files | {"manifest.json"} == {p.name for p in out.iterdir()}

    def test_adversarial_exit(self, tmp_path, config):
        assert main(["estimates", "--config", str(config), "--out", str(tmp_path), "--debug-adversarial"]) == 1

    def test_bad_config(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"levels": []}))
        assert main(["solve", "--config", str(path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_module_entry(self, tmp_path, config):
        proc = subprocess.run(
            [sys.executable, "-m", "moisture_fvm", "residual", "--config", str(config), "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "PASS" in proc.stdout
