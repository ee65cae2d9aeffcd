"""Tests for the train, infer, ablate and analyze commands."""

import csv
import json
from pathlib import Path
from typing import Any

import pytest
from click.testing import CliRunner, Result

from mls_ecology.checkpoint import load_checkpoint
from mls_ecology.cli import cli


def read_rows(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def text(result: Result) -> str:
    """Command output with rich line wrapping undone."""
    return " ".join(result.output.split())


def test_help(runner: CliRunner) -> None:
    """Test that every command is registered."""
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    for command in ("train", "infer", "ablate", "analyze"):
        assert command in result.output


class TestTrain:
    """Tests for the train command."""

    def test_outputs(self, runner: CliRunner, config_file: Path, tmp_path: Path) -> None:
        out = tmp_path / "run"
        result = runner.invoke(cli, ["train", str(config_file), "--out", str(out)])
        assert result.exit_code == 0, result.output

        assert (out / "checkpoint_seed0.json").exists()
        assert (out / "checkpoint_seed0.cma.npz").exists()
        assert len(read_rows(out / "generations.csv")) == 2
        assert len(read_rows(out / "generations_smoothed.csv")) == 2

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert manifest["seeds"] == [0]
        assert manifest["checkpoints"] == ["checkpoint_seed0.json"]
        assert manifest["config"]["rollout"]["T"] == 10
        assert manifest["finished_at"] is not None

    def test_same_seed_identical_bytes(
        self, runner: CliRunner, config_file: Path, tmp_path: Path
    ) -> None:
        for name in ("a", "b"):
            result = runner.invoke(
                cli, ["train", str(config_file), "--seed", "5", "--out", str(tmp_path / name)]
            )
            assert result.exit_code == 0, result.output
        for name in ("generations.csv", "generations_smoothed.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        a = load_checkpoint(tmp_path / "a" / "checkpoint_seed5.json")
        b = load_checkpoint(tmp_path / "b" / "checkpoint_seed5.json")
        assert a.genome == b.genome

    def test_multiple_seeds(self, runner: CliRunner, config_file: Path, tmp_path: Path) -> None:
        out = tmp_path / "run"
        result = runner.invoke(
            cli, ["train", str(config_file), "--seeds", "2", "--generations", "1", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "generations.csv")
        assert [(r["generation"], r["seed"]) for r in rows] == [("0", "0"), ("0", "1")]
        assert (out / "checkpoint_seed1.json").exists()

    def test_zero_generations(self, runner: CliRunner, config_file: Path, tmp_path: Path) -> None:
        out = tmp_path / "run"
        result = runner.invoke(
            cli, ["train", str(config_file), "--generations", "0", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert read_rows(out / "generations.csv") == []
        checkpoint = load_checkpoint(out / "checkpoint_seed0.json")
        assert checkpoint.header.best_fitness is None
        assert set(checkpoint.genome) == {0.0}

    def test_resume(self, runner: CliRunner, config_file: Path, tmp_path: Path) -> None:
        first = tmp_path / "first"
        result = runner.invoke(cli, ["train", str(config_file), "--seed", "3", "--out", str(first)])
        assert result.exit_code == 0, result.output

        second = tmp_path / "second"
        result = runner.invoke(
            cli,
            [
                "train",
                str(config_file),
                "--resume",
                str(first / "checkpoint_seed3.json"),
                "--generations",
                "1",
                "--out",
                str(second),
            ],
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(second / "generations.csv")
        assert [(r["generation"], r["seed"]) for r in rows] == [("2", "3")]
        assert load_checkpoint(second / "checkpoint_seed3.json").header.generation == 3

    def test_resume_rejects_several_seeds(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path
    ) -> None:
        result = runner.invoke(
            cli, ["train", str(config_file), "--resume", str(tiny_checkpoint), "--seeds", "2"]
        )
        assert result.exit_code == 1
        assert "--resume" in text(result)

    def test_invalid_config(
        self, runner: CliRunner, tmp_path: Path, tiny_config: dict[str, Any]
    ) -> None:
        tiny_config["rollout"]["e_death"] = 25.0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(tiny_config))

        result = runner.invoke(cli, ["train", str(path), "--out", str(tmp_path / "run")])
        assert result.exit_code == 1
        assert "Invalid configuration" in text(result)
        assert "e_death" in text(result)
        assert not (tmp_path / "run").exists()

    def test_invalid_environment(
        self, runner: CliRunner, config_file: Path, tmp_path: Path
    ) -> None:
        result = runner.invoke(
            cli,
            ["train", str(config_file), "--out", str(tmp_path / "run")],
            env={"MLS_ROLLOUT__E_DEATH": "30"},
        )
        assert result.exit_code == 1
        assert "Invalid configuration" in text(result)

    def test_malformed_json(self, runner: CliRunner, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text("{")
        result = runner.invoke(cli, ["train", str(path)])
        assert result.exit_code == 1
        assert "Invalid JSON" in text(result)

    def test_negative_seed(self, runner: CliRunner, config_file: Path) -> None:
        result = runner.invoke(cli, ["train", str(config_file), "--seed", "-1"])
        assert result.exit_code == 2


class TestInfer:
    """Tests for the infer command."""

    def test_logs(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "infer"
        result = runner.invoke(
            cli, ["infer", str(tiny_checkpoint), "--config", str(config_file), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output

        trajectory = read_rows(out / "trajectory.csv")
        assert len(trajectory) == 12 * 8
        assert list(trajectory[0]) == [
            "step", "slot", "active", "x", "y", "theta", "e", "e_g", "e_e", "e_c", "m", "role",
        ]
        roles = read_rows(out / "roles.csv")
        assert len(roles) == 12 * 8
        for row in trajectory:
            assert (row["role"] == "-") == (row["active"] == "0")
        assert len(read_rows(out / "proportions.csv")) == 12
        metrics = read_rows(out / "metrics.csv")
        assert [int(r["step"]) for r in metrics] == list(range(12))
        assert all(int(r["active_count"]) >= 2 for r in metrics)

    def test_log_every(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "infer"
        result = runner.invoke(
            cli,
            [
                "infer",
                str(tiny_checkpoint),
                "--config",
                str(config_file),
                "--steps",
                "5",
                "--n-max",
                "4",
                "--log-every",
                "2",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        steps = {row["step"] for row in read_rows(out / "trajectory.csv")}
        assert steps == {"0", "2", "4"}
        assert len(read_rows(out / "roles.csv")) == 3 * 4
        assert len(read_rows(out / "proportions.csv")) == 5

    def test_same_seed_identical_bytes(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path, tmp_path: Path
    ) -> None:
        for name in ("a", "b"):
            result = runner.invoke(
                cli,
                ["infer", str(tiny_checkpoint), "--config", str(config_file), "--seed", "9", "--out", str(tmp_path / name)],
            )
            assert result.exit_code == 0, result.output
        for name in ("trajectory.csv", "metrics.csv", "roles.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_zero_steps(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "infer"
        result = runner.invoke(
            cli,
            ["infer", str(tiny_checkpoint), "--config", str(config_file), "--steps", "0", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert (out / "trajectory.csv").read_text().count("\n") == 1
        assert (out / "manifest.json").exists()

    def test_dimension_mismatch(
        self, runner: CliRunner, tiny_checkpoint: Path, tmp_path: Path
    ) -> None:
        result = runner.invoke(
            cli, ["infer", str(tiny_checkpoint), "--steps", "1", "--out", str(tmp_path / "infer")]
        )
        assert result.exit_code == 1
        assert "do not match" in text(result)

    def test_unreadable_checkpoint(self, runner: CliRunner, tmp_path: Path) -> None:
        path = tmp_path / "ck.json"
        path.write_text("[]")
        result = runner.invoke(cli, ["infer", str(path), "--steps", "1"])
        assert result.exit_code == 1
        assert "cannot read checkpoint" in text(result)


class TestAblate:
    """Tests for the ablate command."""

    def test_settings(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "ablate"
        result = runner.invoke(
            cli,
            [
                "ablate",
                str(tiny_checkpoint),
                "--config",
                str(config_file),
                "--seeds",
                "2",
                "--steps",
                "8",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        for setting in ("Full", "SubstrateOnly", "RandomAll"):
            rows = read_rows(out / f"ablation_{setting}.csv")
            assert len(rows) == 2 * 8
            assert {r["setting"] for r in rows} == {setting}
            assert {r["seed"] for r in rows} == {"0", "1"}
            assert setting in result.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["rollout"]["N_max"] == 6

    def test_missing_checkpoint(self, runner: CliRunner, tmp_path: Path) -> None:
        result = runner.invoke(cli, ["ablate", str(tmp_path / "missing.json")])
        assert result.exit_code != 0


class TestAnalyze:
    """Tests for the analyze command."""

    @pytest.fixture
    def inferred(
        self, runner: CliRunner, config_file: Path, tiny_checkpoint: Path, tmp_path: Path
    ) -> Path:
        out = tmp_path / "infer"
        result = runner.invoke(
            cli, ["infer", str(tiny_checkpoint), "--config", str(config_file), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        return out

    def test_report(self, runner: CliRunner, config_file: Path, inferred: Path) -> None:
        result = runner.invoke(
            cli, ["analyze", str(inferred / "trajectory.csv"), "--config", str(config_file)]
        )
        assert result.exit_code == 0, result.output
        for label in ("Exchange:", "Grazing:", "Suboptimal:", "Mean e+:", "E and G both:"):
            assert label in result.output

    def test_recomputes_logged_series(
        self, runner: CliRunner, config_file: Path, inferred: Path, tmp_path: Path
    ) -> None:
        out = tmp_path / "analysis"
        result = runner.invoke(
            cli,
            ["analyze", str(inferred / "trajectory.csv"), "--config", str(config_file), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert (out / "proportions.csv").read_bytes() == (inferred / "proportions.csv").read_bytes()

        logged = [float(r["e_plus"]) for r in read_rows(inferred / "metrics.csv")]
        recomputed = [float(r["e_plus"]) for r in read_rows(out / "net_resource.csv")]
        assert recomputed == pytest.approx(logged, abs=1e-12)

    def test_inconsistent_role(
        self, runner: CliRunner, config_file: Path, inferred: Path
    ) -> None:
        path = inferred / "trajectory.csv"
        rows = read_rows(path)
        first_active = next(i for i, r in enumerate(rows) if r["active"] == "1")
        rows[first_active]["role"] = "-"
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)

        result = runner.invoke(cli, ["analyze", str(path), "--config", str(config_file)])
        assert result.exit_code == 1
        assert "inconsistent role" in text(result)

    def test_not_a_trajectory(self, runner: CliRunner, inferred: Path) -> None:
        result = runner.invoke(cli, ["analyze", str(inferred / "roles.csv")])
        assert result.exit_code == 1
        assert "not a trajectory log" in text(result)
