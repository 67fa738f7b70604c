"""Command-line interface, configuration parsing, end-to-end determinism."""

import dataclasses
import math

import numpy as np
import pytest
import yaml

from targetrange.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from targetrange.config import ConfigError, DataConfig, ObjectiveConfig, RunConfig
from targetrange.solver import load_policy


def write_config(path, **overrides):
    raw = {
        "data": {"synthetic_assets": 2, "synthetic_rows": 180},
        "objective": {"kind": "strs", "lower": 1.0, "upper": 1.1},
        "horizon": 2,
        "m_paths": 300,
        "mesh": 0.5,
        "seed": 3,
    }
    raw.update(overrides)
    with open(path, "w") as fh:
        yaml.safe_dump(raw, fh)
    return str(path)


class TestConfig:
    def test_defaults_validate(self):
        RunConfig().validate()

    def test_data_source_exclusivity(self):
        with pytest.raises(ConfigError):
            RunConfig(data=DataConfig()).validate()
        with pytest.raises(ConfigError):
            RunConfig(
                data=DataConfig(csv_path="x.csv", synthetic_assets=2)
            ).validate()

    def test_objective_validation(self):
        with pytest.raises(ConfigError):
            RunConfig(objective=ObjectiveConfig(kind="mystery")).validate()
        with pytest.raises(ConfigError):
            RunConfig(objective=ObjectiveConfig(kind="crra")).validate()
        with pytest.raises(ConfigError):
            RunConfig(objective=ObjectiveConfig(kind="relative_strs", lower=-0.1, upper=0.1)).validate()
        with pytest.raises(ConfigError):
            RunConfig(objective=ObjectiveConfig(lower=1.2, upper=1.1)).validate()

    def test_numeric_validation(self):
        with pytest.raises(ConfigError):
            RunConfig(mesh=0.3).validate()
        with pytest.raises(ConfigError):
            RunConfig(horizon=0).validate()
        with pytest.raises(ConfigError):
            RunConfig(cost_rate=-0.01).validate()
        with pytest.raises(ConfigError):
            RunConfig(mode="ridge").validate()

    def test_unbounded_upper_spelled_as_none(self):
        cfg = RunConfig(objective=ObjectiveConfig(upper=None)).validate()
        assert cfg.objective.build().upper == math.inf

    def test_yaml_round_trip(self, tmp_path):
        cfg = RunConfig(
            data=DataConfig(synthetic_assets=2),
            investable=("asset_0",),
            objective=ObjectiveConfig(kind="crra", gamma=6.0),
            seed=9,
        )
        path = tmp_path / "cfg.yaml"
        cfg.to_yaml(path)
        back = RunConfig.from_yaml(path)
        assert back == cfg
        assert back.config_hash() == cfg.config_hash()

    def test_hash_ignores_out_dir_only(self):
        a = RunConfig(out_dir="x")
        b = RunConfig(out_dir="y")
        assert a.config_hash() == b.config_hash()
        assert RunConfig(seed=1).config_hash() != RunConfig(seed=2).config_hash()

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path / "c.yaml")
        with open(path, "a") as fh:
            fh.write("turbo: true\n")
        with pytest.raises(ConfigError):
            RunConfig.from_yaml(path)


class TestCliSolve:
    def test_writes_outputs_and_summary(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml")
        out = tmp_path / "out"
        assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "v0=" in printed and "P[W<1]=" in printed
        for name in ("stats.csv", "histogram.csv", "percentiles.csv", "policy.npz"):
            assert (out / name).exists()
        policy = load_policy(out / "policy.npz")
        assert policy.horizon == 2

    def test_reruns_byte_identical_across_out_dirs(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["solve", "--config", cfg, "--out", str(out1)]) == EXIT_OK
        assert main(["solve", "--config", cfg, "--out", str(out2)]) == EXIT_OK
        for name in ("stats.csv", "histogram.csv", "percentiles.csv", "policy.npz"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_seed_override_changes_results(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["solve", "--config", cfg, "--out", str(out1)])
        main(["solve", "--config", cfg, "--out", str(out2), "--seed", "77"])
        assert (out1 / "stats.csv").read_bytes() != (out2 / "stats.csv").read_bytes()

    def test_oos_differs_from_in_sample(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["solve", "--config", cfg, "--out", str(out1)])
        main(["solve", "--config", cfg, "--out", str(out2), "--oos"])
        assert (out1 / "stats.csv").read_bytes() != (out2 / "stats.csv").read_bytes()
        # the policy itself is trained on the same scenarios either way
        assert (out1 / "policy.npz").read_bytes() == (out2 / "policy.npz").read_bytes()


class TestCliErrors:
    def test_invalid_config_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml", mesh=0.7)
        assert main(["solve", "--config", cfg]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_is_io_error(self, tmp_path):
        assert main(["solve", "--config", str(tmp_path / "nope.yaml")]) == EXIT_IO

    def test_sweep_without_values(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml")
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_ingest_check_requires_csv_source(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml")
        assert main(["ingest-check", "--config", cfg]) == EXIT_CONFIG


class TestCliOtherCommands:
    def test_sweep_values(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml")
        out = tmp_path / "o"
        code = main(
            ["sweep", "--config", cfg, "--out", str(out), "--vary", "upper",
             "--values", "1.05,1.15,inf"]
        )
        assert code == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3 + 3  # provenance + header + one row per value

    def test_frontier_flags(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml")
        out = tmp_path / "o"
        code = main(
            ["sweep", "--config", cfg, "--out", str(out),
             "--frontier-strs", "1.0:1.05,1.0:1.2", "--frontier-crra", "4"]
        )
        assert code == EXIT_OK
        lines = (out / "frontier.csv").read_text().splitlines()
        assert len(lines) == 3 + 3

    def test_validate_compares_modes(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml")
        out = tmp_path / "o"
        assert main(["validate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        printed = capsys.readouterr().out
        for mode in ("classical_direct", "two_stage_const_sigma", "two_stage_state_sigma"):
            assert mode in printed
        assert (out / "validate.csv").exists()

    def test_simulate_writes_scenarios(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "c.yaml")
        out = tmp_path / "o"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_OK
        assert (out / "scenarios.npz").exists()
        assert "300 paths" in capsys.readouterr().out

    def test_ingest_check_reports(self, tmp_path, capsys):
        csv_path = tmp_path / "m.csv"
        with open(csv_path, "w") as fh:
            fh.write("date,a,b\n")
            for i in range(10):
                fh.write(f"2001-{i + 1:02d},0.01,0.02\n")
        cfg = write_config(
            tmp_path / "c.yaml",
            data={"csv_path": str(csv_path)},
            investable=["a"],
        )
        assert main(["ingest-check", "--config", cfg]) == EXIT_OK
        assert "10 rows" in capsys.readouterr().out
