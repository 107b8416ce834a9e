"""End-to-end tests of the command-line subcommands."""
import importlib
import json
import math

import pytest
import yaml

from proxdyn_helper.cli.main import main, process_args
from proxdyn_helper.core.config import parse_config
from proxdyn_helper.core.scenario import run_exploration
from proxdyn_helper.utils.logging import configure_logging
from . import test_consts

configure_logging(propagate=True)

cli_module = importlib.import_module("proxdyn_helper.cli.main")

pytestmark = pytest.mark.integration


def _run(*argv):
    main([str(a) for a in argv])


def _summary(tmp_path, stem, mode, ext="yaml"):
    return yaml.safe_load((tmp_path / f"{stem}_{mode}_summary.{ext}").read_text())


class TestProcessArgs:

    def test_defaults(self):
        args = process_args(["simulate", "run.yaml"])
        assert args.mode == "simulate"
        assert args.format == "yaml"
        assert args.output_dir == "."
        assert args.tol is None

    def test_obstacle_flag(self):
        assert process_args(["explore", "run.yaml"]).obstacles is None
        assert process_args(["explore", "run.yaml", "--no-obstacles"]).obstacles is False

    def test_subcommand_is_required(self):
        with pytest.raises(SystemExit):
            process_args([])


class TestValidateGraph:

    def test_valid_graph(self, configs_dir, tmp_path, capsys):
        _run("validate-graph", configs_dir / "robots_static.yaml", "--output-dir", tmp_path)
        assert capsys.readouterr().out.strip() == "valid N=4 a_bar=0.25"
        summary = _summary(tmp_path, "robots_static", "validate-graph")
        assert summary["valid"] is True
        assert summary["N"] == 4

    def test_invalid_graph_exits_nonzero(self, tmp_path, caplog):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"graph": {"P": test_consts.ROW_SUM_POINT_NINE_P}}))
        with pytest.raises(SystemExit) as excinfo:
            _run("validate-graph", config, "--output-dir", tmp_path)
        assert excinfo.value.code == 1
        assert "Graph validation failed" in caplog.text

    def test_missing_config_exits_nonzero(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            _run("validate-graph", tmp_path / "absent.yaml")
        assert excinfo.value.code == 1


class TestSolveLmi:

    def test_certified_record(self, configs_dir, tmp_path, capsys):
        _run("solve-lmi", configs_dir / "robots_static.yaml", "--eta", "0.75", "--output-dir", tmp_path,
             "--format", "json")
        printed = [float(v) for v in capsys.readouterr().out.split()]
        assert len(printed) == 4
        record = tmp_path / "robots_static_certified.json"
        certified = parse_config(record)
        assert certified.certificate["feasible"] is True
        assert certified.certificate["eta"] == 0.75
        assert certified.eta == 0.75
        ratios = certified.Qtilde.diagonal / certified.Qtilde.diagonal[1]
        assert ratios.tolist() == pytest.approx(test_consts.ROBOT_PI_RATIOS, abs=1e-9)
        summary = _summary(tmp_path, "robots_static", "solve-lmi", "json")
        assert summary["overrides"] == {"eta": 0.75}
        assert summary["seed"] == 0

    def test_infeasible_eta_exits_nonzero(self, configs_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            _run("solve-lmi", configs_dir / "robots_static.yaml", "--eta", "0.5", "--restarts", "2",
                 "--iterations", "50", "--output-dir", tmp_path)
        assert excinfo.value.code == 1
        assert not (tmp_path / "robots_static_certified.yaml").exists()

    def test_eta_out_of_range(self, configs_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            _run("solve-lmi", configs_dir / "robots_static.yaml", "--eta", "1.5", "--output-dir", tmp_path)
        assert excinfo.value.code == 1


class TestSimulate:

    def test_outputs(self, configs_dir, tmp_path):
        _run("simulate", configs_dir / "robots_static.yaml", "--output-dir", tmp_path, "--tol", "1e-10")
        summary = _summary(tmp_path, "robots_static", "simulate")
        assert summary["converged"] is True
        assert summary["projected_initial"] is False
        assert (tmp_path / "robots_static_simulate.csv").read_text().startswith(
            "step,agent,dim0,dim1,residual,mode\n")
        assert (tmp_path / "robots_static_simulate.svg").exists()

    def test_scalar_states_skip_the_figure(self, tmp_path):
        config = tmp_path / "scalar.yaml"
        config.write_text(yaml.safe_dump({
            "graph": {"P": test_consts.TWO_AGENT_P},
            "weights": {"Q": [0.5, 0.5]},
            "agents": [
                {"gamma": 1.0, "target": [0.0], "initial": [4.0],
                 "constraint": {"box": {"center": [0.0], "half_width": [10.0]}}},
                {"gamma": 1.0, "target": [2.0], "initial": [4.0],
                 "constraint": {"box": {"center": [0.0], "half_width": [10.0]}}},
            ],
        }))
        _run("simulate", config, "--output-dir", tmp_path)
        summary = _summary(tmp_path, "scalar", "simulate")
        assert summary["svg"] is None
        assert not (tmp_path / "scalar_simulate.svg").exists()

    def test_markdown_config(self, configs_dir, tmp_path):
        document = yaml.safe_load((configs_dir / "robots_static.yaml").read_text())
        config = tmp_path / "static.md"
        config.write_text("---\n" + yaml.safe_dump(document) + "---\n\nFour robots.\n")
        _run("simulate", config, "--output-dir", tmp_path, "--format", "md", "--max-iter", "5")
        summary = (tmp_path / "static_simulate_summary.md").read_text()
        assert summary.startswith("---\n")
        assert "max_iter: 5" in summary


class TestSwitching:

    def test_dwell_bound(self, configs_dir, tmp_path, capsys):
        _run("dwell-bound", configs_dir / "switching_common_target.yaml", "--output-dir", tmp_path)
        bound = float(capsys.readouterr().out)
        assert bound == pytest.approx(math.log(4.0) / math.log(5.0), rel=1e-11)
        assert _summary(tmp_path, "switching_common_target", "dwell-bound")["tau_min"] == 1

    def test_dwell_bound_needs_signal(self, configs_dir, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            _run("dwell-bound", configs_dir / "robots_static.yaml", "--output-dir", tmp_path)
        assert excinfo.value.code == 1

    def test_switch_sim(self, configs_dir, tmp_path):
        _run("switch-sim", configs_dir / "switching_common_target.yaml", "--output-dir", tmp_path)
        summary = _summary(tmp_path, "switching_common_target", "switch-sim")
        assert summary["converged"] is True
        lines = (tmp_path / "switching_common_target_switch-sim.csv").read_text().splitlines()
        assert lines[0].endswith(",mode")
        assert lines[4].endswith(",1")

    def test_tau_override_invalidates_signal(self, configs_dir, tmp_path, caplog):
        with pytest.raises(SystemExit) as excinfo:
            _run("switch-sim", configs_dir / "switching_common_target.yaml", "--tau", "5", "--output-dir", tmp_path)
        assert excinfo.value.code == 1
        assert "must exceed tau=5" in caplog.text


class TestExplore:

    def test_obstacle_run(self, configs_dir, tmp_path):
        _run("explore", configs_dir / "robots_obstacle.yaml", "--output-dir", tmp_path)
        summary = _summary(tmp_path, "robots_obstacle", "explore")
        assert summary["converged"] is True
        assert summary["obstacles"] == 1
        assert summary["stalled"] == []
        assert (tmp_path / "robots_obstacle_explore.svg").read_bytes().lstrip().startswith(b"<?xml")

    def test_obstacles_can_be_switched_off(self, configs_dir, tmp_path, mocker):
        spy = mocker.patch.object(cli_module, "run_exploration", wraps=run_exploration)
        _run("explore", configs_dir / "robots_obstacle.yaml", "--no-obstacles", "--output-dir", tmp_path)
        (scenario,), _ = spy.call_args
        assert len(scenario.obstacles) == 0
        assert _summary(tmp_path, "robots_obstacle", "explore")["overrides"] == {"obstacles": False}


class TestFailedRunsLeaveNoOutputs:

    @pytest.mark.parametrize("mode, config", [
        ("simulate", "robots_static.yaml"),
        ("explore", "robots_obstacle.yaml"),
        ("validate-graph", "robots_static.yaml"),
    ])
    def test_summary_write_failure(self, configs_dir, tmp_path, mocker, mode, config):
        mocker.patch.object(cli_module, "write_record", side_effect=OSError("disk full"))
        out = tmp_path / "out"
        with pytest.raises(SystemExit) as excinfo:
            _run(mode, configs_dir / config, "--output-dir", out)
        assert excinfo.value.code == 1
        assert list(out.iterdir()) == []

    def test_figure_failure_removes_the_table(self, configs_dir, tmp_path, mocker, caplog):
        mocker.patch.object(cli_module, "export_svg", side_effect=RuntimeError("renderer crashed"))
        with pytest.raises(SystemExit):
            _run("simulate", configs_dir / "robots_static.yaml", "--output-dir", tmp_path / "out")
        assert list((tmp_path / "out").iterdir()) == []
        assert "Removed partial output" in caplog.text

    def test_switched_run_failure(self, configs_dir, tmp_path, mocker):
        mocker.patch.object(cli_module, "write_summary", side_effect=OSError("read-only file system"))
        with pytest.raises(SystemExit):
            _run("switch-sim", configs_dir / "switching_common_target.yaml", "--output-dir", tmp_path / "out")
        assert list((tmp_path / "out").iterdir()) == []
