"""CSV output formats and console summaries.

Every CSV is UTF-8 with LF line endings and a header row. Floats are written
with Python's shortest round-trip repr so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from types import TracebackType
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .analysis import AblationRun, smooth
from .evolution import GenerationRecord
from .state import Population

TRAJECTORY_COLUMNS = [
    "step", "slot", "active", "x", "y", "theta", "e", "e_g", "e_e", "e_c", "m", "role",
]
ROLE_COLUMNS = ["step", "slot", "role"]
PROPORTION_COLUMNS = ["step", "frac_exchange", "frac_grazing", "frac_suboptimal"]
GENERATION_COLUMNS = [
    "generation", "seed", "best_f", "mean_f", "best_f_e", "best_f_a", "e_eplus_mean",
]
ABLATION_COLUMNS = ["setting", "seed", "step", "e_plus", "e_eplus"]


def format_float(value: float) -> str:
    return repr(float(value))


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    return str(value)


def write_csv(output: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a whole table at once."""
    with CsvLog(output, columns) as log:
        log.write_rows(rows)
    return output


class CsvLog:
    """Append-only CSV writer for rows produced while a rollout runs."""

    def __init__(self, output: Path, columns: Sequence[str]) -> None:
        self.output = output
        self.columns = list(columns)
        self.rows_written = 0
        output.parent.mkdir(parents=True, exist_ok=True)
        self._file = output.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(self.columns)

    def write_rows(self, rows: Iterable[Sequence[Any]]) -> None:
        for row in rows:
            self._writer.writerow([_cell(v) for v in row])
            self.rows_written += 1

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> CsvLog:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()


# --- Row builders ---


def trajectory_rows(
    step: int,
    pop: Population,
    roles: NDArray[np.str_],
    e_g: NDArray[np.float64],
    e_e: NDArray[np.float64],
    e_c: NDArray[np.float64],
) -> list[tuple[Any, ...]]:
    """One row per slot: post-step state with the channel values of the step."""
    return [
        (
            step,
            slot,
            bool(pop.active[slot]),
            pop.q[slot, 0],
            pop.q[slot, 1],
            pop.theta[slot],
            pop.e[slot],
            e_g[slot],
            e_e[slot],
            e_c[slot],
            pop.m[slot],
            roles[slot],
        )
        for slot in range(pop.n_slots)
    ]


def role_rows(step: int, roles: NDArray[np.str_]) -> list[tuple[int, int, str]]:
    return [(step, slot, str(code)) for slot, code in enumerate(roles)]


def proportion_row(step: int, fractions: NDArray[np.float64]) -> tuple[Any, ...]:
    return (step, *(float(x) for x in fractions))


def generation_rows(
    records: Sequence[GenerationRecord], bins: int = 1
) -> list[tuple[Any, ...]]:
    """Rows per record, smoothed per seed over ``bins`` generations."""
    rows: list[tuple[Any, ...]] = []
    for seed in dict.fromkeys(r.seed for r in records):
        own = [r for r in records if r.seed == seed]
        columns = [
            smooth([r.best_f for r in own], bins),
            smooth([r.mean_f for r in own], bins),
            smooth([r.best_f_e for r in own], bins),
            smooth([r.best_f_a for r in own], bins),
            smooth([r.e_eplus_mean for r in own], bins),
        ]
        for i, record in enumerate(own):
            rows.append((record.generation, seed, *(float(c[i]) for c in columns)))
    return rows


def ablation_rows(runs: Sequence[AblationRun], bins: int = 1) -> list[tuple[Any, ...]]:
    rows: list[tuple[Any, ...]] = []
    for run in runs:
        e_plus = smooth(run.e_plus, bins)
        e_eplus = smooth(run.e_eplus, bins)
        rows.extend(
            (run.setting.value, run.seed, t, float(e_plus[t]), float(e_eplus[t]))
            for t in range(len(e_plus))
        )
    return rows


# --- Reading logs back ---


@dataclass(frozen=True)
class TrajectoryLog:
    """A trajectory CSV as (steps, slots) arrays."""

    steps: NDArray[np.int64]
    active: NDArray[np.bool_]
    e_g: NDArray[np.float64]
    e_e: NDArray[np.float64]
    e_c: NDArray[np.float64]
    roles: NDArray[np.str_]

    @property
    def n_slots(self) -> int:
        return self.active.shape[1]


def read_trajectory(path: Path) -> TrajectoryLog:
    """Parse a trajectory CSV; raises ValueError on a wrong header or ragged steps."""
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRAJECTORY_COLUMNS:
            raise ValueError(f"{path} is not a trajectory log (header {header})")
        rows = list(reader)

    if not rows:
        empty = np.zeros((0, 0))
        return TrajectoryLog(
            steps=np.zeros(0, dtype=np.int64),
            active=empty.astype(bool),
            e_g=empty,
            e_e=empty,
            e_c=empty,
            roles=empty.astype("<U1"),
        )

    col = {name: i for i, name in enumerate(TRAJECTORY_COLUMNS)}
    steps = np.array([int(r[col["step"]]) for r in rows])
    slots = np.array([int(r[col["slot"]]) for r in rows])
    order = np.unique(steps)
    n_slots = int(slots.max()) + 1
    if len(rows) != order.size * n_slots:
        raise ValueError(f"{path}: expected {n_slots} rows per step")
    shape = (order.size, n_slots)
    row_of = np.searchsorted(order, steps)

    def table(name: str, dtype: Any) -> NDArray[Any]:
        out = np.zeros(shape, dtype=dtype)
        out[row_of, slots] = np.array([r[col[name]] for r in rows]).astype(dtype)
        return out

    return TrajectoryLog(
        steps=order,
        active=table("active", np.int64).astype(bool),
        e_g=table("e_g", np.float64),
        e_e=table("e_e", np.float64),
        e_c=table("e_c", np.float64),
        roles=table("role", "<U1"),
    )


def format_generation(record: GenerationRecord) -> str:
    """One-line console summary of a generation."""
    return (
        f"gen {record.generation}: best {record.best_f:.4f} "
        f"(f_e {record.best_f_e:.4f}, f_a {record.best_f_a:.0f}), mean {record.mean_f:.4f}, "
        f"e+ {record.e_eplus_mean:.2e}"
    )
