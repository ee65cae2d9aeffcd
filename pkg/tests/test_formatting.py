"""Unit tests for formatting module."""

from pathlib import Path

import numpy as np
import pytest

from mls_ecology.analysis import AblationRun, AblationSetting, population_roles
from mls_ecology.evolution import GenerationRecord
from mls_ecology.formatting import (
    ABLATION_COLUMNS,
    TRAJECTORY_COLUMNS,
    CsvLog,
    ablation_rows,
    format_float,
    format_generation,
    generation_rows,
    read_trajectory,
    role_rows,
    trajectory_rows,
    write_csv,
)
from mls_ecology.state import Population


def record(generation: int, seed: int, best: float) -> GenerationRecord:
    return GenerationRecord(
        generation=generation,
        seed=seed,
        f=(best, best - 2.0),
        f_e=(best, best - 2.0),
        f_a=(0.0, 0.0),
        e_eplus_mean=1e-5,
    )


def population() -> Population:
    pop = Population.empty(3, 2)
    pop.active[[0, 2]] = True
    pop.q[0] = [1.5, -2.0]
    pop.e[0] = 30.0
    pop.e[2] = 10.0
    pop.ebar_g[0] = 0.2
    pop.ebar_e_plus[2] = 0.4
    return pop


class TestCsv:
    """Tests for the CSV writers."""

    def test_float_repr(self) -> None:
        assert format_float(0.1) == "0.1"
        assert format_float(np.float64(1e-5)) == "1e-05"
        assert float(format_float(1 / 3)) == 1 / 3

    def test_write_csv_bytes(self, tmp_path: Path) -> None:
        path = write_csv(tmp_path / "sub" / "out.csv", ["a", "b", "c"], [(1, 0.5, True), (2, "x", False)])
        assert path.read_bytes() == b"a,b,c\n1,0.5,1\n2,x,0\n"

    def test_header_only(self, tmp_path: Path) -> None:
        with CsvLog(tmp_path / "log.csv", ABLATION_COLUMNS) as log:
            assert log.rows_written == 0
        assert (tmp_path / "log.csv").read_text() == ",".join(ABLATION_COLUMNS) + "\n"

    def test_rows_written(self, tmp_path: Path) -> None:
        with CsvLog(tmp_path / "log.csv", ["step"]) as log:
            log.write_rows([(0,), (1,)])
            log.write_rows([(2,)])
        assert log.rows_written == 3


class TestRows:
    """Tests for row builders."""

    def test_generation_rows_per_seed(self) -> None:
        records = [record(0, 0, 1.0), record(1, 0, 3.0), record(0, 1, 10.0), record(1, 1, 20.0)]
        rows = generation_rows(records, bins=2)
        assert [(r[0], r[1]) for r in rows] == [(0, 0), (1, 0), (0, 1), (1, 1)]
        assert rows[1][2] == pytest.approx(2.0)
        assert rows[2][2] == 10.0
        assert rows[3][2] == pytest.approx(15.0)
        assert rows[3][3] == pytest.approx(13.0)

    def test_generation_rows_raw(self) -> None:
        rows = generation_rows([record(4, 0, 5.0)])
        assert rows == [(4, 0, 5.0, 4.0, 5.0, 0.0, 1e-5)]

    def test_ablation_rows(self) -> None:
        runs = [
            AblationRun(AblationSetting.FULL, 0, np.array([1.0, 3.0, 5.0]), np.zeros(3)),
            AblationRun(AblationSetting.FULL, 1, np.array([2.0, 2.0, 2.0]), np.ones(3)),
        ]
        rows = ablation_rows(runs, bins=2)
        assert len(rows) == 6
        assert rows[1] == ("Full", 0, 1, 2.0, 0.0)
        assert rows[5] == ("Full", 1, 2, 2.0, 1.0)

    def test_trajectory_rows(self) -> None:
        pop = population()
        roles = population_roles(pop)
        e_g = np.array([0.1, 0.0, 0.0])
        rows = trajectory_rows(7, pop, roles, e_g, np.zeros(3), np.zeros(3))
        assert len(rows) == 3
        assert len(rows[0]) == len(TRAJECTORY_COLUMNS)
        assert rows[0][:5] == (7, 0, True, 1.5, -2.0)
        assert [row[-1] for row in rows] == ["G", "-", "E"]

    def test_role_rows(self) -> None:
        assert role_rows(3, np.array(["E", "-"])) == [(3, 0, "E"), (3, 1, "-")]

    def test_format_generation(self) -> None:
        assert format_generation(record(12, 0, 4.0)).startswith("gen 12: best 4.0000")


class TestReadTrajectory:
    """Tests for reading trajectory logs back."""

    def write_log(self, path: Path, steps: list[int]) -> Path:
        pop = population()
        roles = population_roles(pop)
        e_g = np.array([0.1, 0.0, 0.3])
        e_c = np.array([0.05, 0.0, 0.1])
        rows = []
        for step in steps:
            rows.extend(trajectory_rows(step, pop, roles, e_g, np.zeros(3), e_c))
        return write_csv(path, TRAJECTORY_COLUMNS, rows)

    def test_round_trip(self, tmp_path: Path) -> None:
        log = read_trajectory(self.write_log(tmp_path / "t.csv", [0, 5, 10]))
        np.testing.assert_array_equal(log.steps, [0, 5, 10])
        assert log.n_slots == 3
        np.testing.assert_array_equal(log.active[1], [True, False, True])
        np.testing.assert_array_equal(log.e_g[2], [0.1, 0.0, 0.3])
        np.testing.assert_array_equal(log.e_c[0], [0.05, 0.0, 0.1])
        assert list(log.roles[0]) == ["G", "-", "E"]

    def test_empty_log(self, tmp_path: Path) -> None:
        log = read_trajectory(self.write_log(tmp_path / "t.csv", []))
        assert log.steps.size == 0

    def test_wrong_header(self, tmp_path: Path) -> None:
        path = write_csv(tmp_path / "t.csv", ["step", "slot", "role"], [(0, 0, "E")])
        with pytest.raises(ValueError, match="not a trajectory log"):
            read_trajectory(path)

    def test_ragged_steps(self, tmp_path: Path) -> None:
        path = self.write_log(tmp_path / "t.csv", [0, 1])
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(ValueError, match="rows per step"):
            read_trajectory(path)
