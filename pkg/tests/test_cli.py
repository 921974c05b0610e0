"""CLI tests: config parsing with strict key validation, degree-to-radian
conversion at the interface, subcommand exit codes, output placement, and
the self-check fault hook."""

import numpy as np
import pytest

from gtmpc import cli
from gtmpc.cli import (ConfigError, build_campaign, build_scenario,
                       default_config_path, load_config, main)
from gtmpc.simharness import RunMetrics, Telemetry, ViolationCounts, \
    nominal_scenario

BUNDLED = str(default_config_path())


class TestLoadConfig:
    def test_bundled_config_parses(self):
        cfg = load_config(BUNDLED)
        assert cfg["scenario"]["controller"] == "mpc"
        assert cfg["limits"]["omega_max_deg"] == 3.0
        assert cfg["weights"]["w_s"] == 1e9
        np.testing.assert_array_equal(cfg["spacecraft"]["v_ins_b"],
                                      [0.0, 0.0, 1.0])

    def test_unknown_key_named_in_error(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[limits]\nomega_max = 3\n")
        with pytest.raises(ConfigError, match="omega_max"):
            load_config(p)

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[thrusters]\nn = 4\n")
        with pytest.raises(ConfigError, match="thrusters"):
            load_config(p)

    def test_bad_value_named(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[scenario]\nduration = soon\n")
        with pytest.raises(ConfigError, match="scenario.duration"):
            load_config(p)

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("/nonexistent/path.ini")

    def test_overrides_applied_after_file(self):
        cfg = load_config(BUNDLED, ["scenario.duration=5.0",
                                    "limits.omega_max_deg=2.0"])
        assert cfg["scenario"]["duration"] == 5.0
        assert cfg["limits"]["omega_max_deg"] == 2.0

    def test_override_validation(self):
        with pytest.raises(ConfigError, match="section.key=value"):
            load_config(BUNDLED, ["duration=5"])
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(BUNDLED, ["scenario.speed=5"])


class TestBuildScenario:
    def test_bundled_matches_reference_scenario(self):
        built = build_scenario(load_config(BUNDLED))
        ref = nominal_scenario()
        assert built.orbit.altitude == ref.orbit.altitude
        assert built.orbit.raan == pytest.approx(ref.orbit.raan, abs=1e-12)
        assert built.orbit.epoch == ref.orbit.epoch
        assert built.target.latitude == pytest.approx(ref.target.latitude)
        assert built.limits.omega_max == pytest.approx(np.radians(3.0))
        assert built.limits.alpha_nadir == pytest.approx(np.radians(89.0))
        assert built.weights.w_p == 100.0
        np.testing.assert_allclose(built.weights.q_omega,
                                   0.05 * np.eye(3))
        np.testing.assert_array_equal(built.spacecraft.j_body,
                                      ref.spacecraft.j_body)

    def test_invalid_scenario_is_config_error(self):
        cfg = load_config(BUNDLED, ["scenario.controller=pid"])
        with pytest.raises(ConfigError, match="invalid scenario"):
            build_scenario(cfg)

    def test_campaign_validation_is_config_error(self):
        cfg = load_config(BUNDLED, ["mc.n_runs=0", "scenario.duration=1"])
        base = build_scenario(cfg)
        with pytest.raises(ConfigError, match="invalid campaign"):
            build_campaign(cfg, base)


class TestCmdRun:
    def test_short_run_writes_outputs(self, tmp_path):
        code = main(["run", "--output-dir", str(tmp_path),
                     "--set", "scenario.duration=2.0"])
        assert code == 0
        lines = (tmp_path / "telemetry.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 20  # header + duration/ts rows
        metrics = (tmp_path / "metrics.txt").read_text()
        assert "violations_rate = 0" in metrics
        assert "aborted = False" in metrics

    def test_naive_controller_override(self, tmp_path):
        code = main(["run", "--output-dir", str(tmp_path),
                     "--set", "scenario.duration=2.0",
                     "--set", "scenario.controller=naive"])
        assert code == 0
        assert "none" in (tmp_path / "telemetry.csv").read_text()

    def test_malformed_config_exits_1(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text("[limits]\nomega_max = 3\n")
        code = main(["run", "--config", str(p),
                     "--output-dir", str(tmp_path)])
        assert code == 1
        err = capsys.readouterr().err
        assert "omega_max" in err

    def test_aborted_run_exits_2(self, tmp_path, monkeypatch):
        def fake_run(scenario):
            met = RunMetrics(None, None, None, ViolationCounts(), 0.0, 0,
                             False, qp_failures=6, aborted=True)
            return Telemetry.empty(), met

        monkeypatch.setattr(cli, "run", fake_run)
        code = main(["run", "--output-dir", str(tmp_path),
                     "--set", "scenario.duration=1.0"])
        assert code == 2

    def test_seed_flag_overrides(self, tmp_path, monkeypatch):
        seen = {}

        def fake_run(scenario):
            seen["seed"] = scenario.seed
            met = RunMetrics(None, None, None, ViolationCounts(), 0.0, 0,
                             False)
            return Telemetry.empty(), met

        monkeypatch.setattr(cli, "run", fake_run)
        main(["run", "--output-dir", str(tmp_path), "--seed", "99",
              "--set", "scenario.duration=1.0"])
        assert seen["seed"] == 99


class TestCmdMc:
    def test_campaign_outputs_and_rerun_identical(self, tmp_path):
        argv = ["mc", "--output-dir", str(tmp_path),
                "--set", "scenario.duration=2.0", "--set", "mc.n_runs=2",
                "--seed", "4"]
        assert main(argv) == 0
        runs_a = (tmp_path / "mc_runs.csv").read_text()
        summary = (tmp_path / "mc_summary.txt").read_text()
        assert len(runs_a.strip().split("\n")) == 3
        for key in ("exclusion_active_fraction",
                    "all_constraints_met_fraction",
                    "both_zones_active_count", "mean_pointing_error_deg",
                    "mean_settling_time_s", "max_qp_iters"):
            assert key in summary
        assert main(argv) == 0
        assert (tmp_path / "mc_runs.csv").read_text() == runs_a

    def test_invalid_campaign_exits_1(self, tmp_path, capsys):
        code = main(["mc", "--output-dir", str(tmp_path),
                     "--set", "mc.n_runs=0",
                     "--set", "scenario.duration=1.0"])
        assert code == 1
        assert "n_runs" in capsys.readouterr().err


class TestCmdLincheck:
    def test_default_passes(self, capsys):
        assert main(["lincheck", "--trials", "10"]) == 0
        out = capsys.readouterr().out
        for name in ("jacobian-fd", "zoh-expm", "qp-kkt"):
            assert name in out
        assert "FAIL" not in out

    def test_injected_fault_exits_3(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "LINCHECK_FAULT", "jacobian_sign")
        assert main(["lincheck", "--trials", "5"]) == 3
        captured = capsys.readouterr()
        assert "jacobian-fd" in captured.err
        assert "FAIL" in captured.out
