"""Infer command: one long rollout of a trained genome with trajectory and role logs."""

from __future__ import annotations

from pathlib import Path

import click
from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from .analysis import population_roles, role_proportions
from .checkpoint import CheckpointError, check_compatible, checkpoint_genome, load_checkpoint
from .engine import Simulation, StepSummary, World
from .formatting import (
    PROPORTION_COLUMNS,
    ROLE_COLUMNS,
    TRAJECTORY_COLUMNS,
    CsvLog,
    proportion_row,
    role_rows,
    trajectory_rows,
)
from .neural import GenomeDecodeError
from .runs import RunDirectory, resolve_config

console = Console()

METRIC_COLUMNS = ["step", "active_count", "e_plus", "e_eplus", "births", "deaths"]


@click.command()
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON configuration file.",
)
@click.option("--steps", type=click.IntRange(min=0), help="Rollout length (default 30000).")
@click.option("--n-max", type=click.IntRange(min=1), help="Population slots (default 250).")
@click.option("--seed", type=click.IntRange(min=0), default=0, help="Scenario seed.")
@click.option(
    "--log-every",
    type=click.IntRange(min=1),
    default=1,
    help="Write trajectory and role rows every N steps.",
)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory.")
def infer(
    checkpoint: Path,
    config_file: Path | None,
    steps: int | None,
    n_max: int | None,
    seed: int,
    log_every: int,
    out: Path | None,
) -> None:
    """Run a trained genome for a long rollout and log every boid.

    CHECKPOINT is a checkpoint written by [bold]train[/bold]. Writes
    trajectory.csv, roles.csv, proportions.csv and metrics.csv.
    """
    base = resolve_config(console, config_file)
    config = resolve_config(
        console,
        config_file,
        {
            "rollout": {
                "T": base.analysis.inference_steps if steps is None else steps,
                "N_max": base.analysis.inference_n_max if n_max is None else n_max,
            }
        },
    )
    rollout = config.rollout

    try:
        stored = load_checkpoint(checkpoint)
        check_compatible(stored, rollout)
        simulation = Simulation.from_genome(rollout, checkpoint_genome(stored), seed)
    except (CheckpointError, GenomeDecodeError) as e:
        console.print(f"[red]{escape(str(e))}[/red]")
        raise SystemExit(1)

    run = RunDirectory.create("infer", out, config, [seed])
    run.manifest.checkpoints.append(str(checkpoint))

    with (
        CsvLog(run.file("trajectory.csv"), TRAJECTORY_COLUMNS) as trajectory,
        CsvLog(run.file("roles.csv"), ROLE_COLUMNS) as roles_log,
        CsvLog(run.file("proportions.csv"), PROPORTION_COLUMNS) as proportions,
        CsvLog(run.file("metrics.csv"), METRIC_COLUMNS) as metrics_log,
        Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=console,
        ) as progress,
    ):
        task = progress.add_task("steps", total=rollout.T)

        def observe(world: World, summary: StepSummary) -> None:
            roles = population_roles(world.population)
            proportions.write_rows([proportion_row(summary.t, role_proportions(roles)[0])])
            metrics_log.write_rows(
                [
                    (
                        summary.t,
                        summary.active_count,
                        summary.e_plus / rollout.N_max,
                        summary.e_eplus / rollout.N_max,
                        summary.births,
                        summary.deaths,
                    )
                ]
            )
            if summary.t % log_every == 0:
                trajectory.write_rows(
                    trajectory_rows(
                        summary.t, world.population, roles, summary.e_g, summary.e_e, summary.e_c
                    )
                )
                roles_log.write_rows(role_rows(summary.t, roles))
            progress.advance(task)

        result = simulation.run(observer=observe)

    manifest = run.finish()
    console.print(
        f"[green]{rollout.T} steps:[/green] {result.births} births, {result.deaths} deaths, "
        f"mean e+ {result.f_e / max(rollout.T, 1) / rollout.N_max:.4f}"
    )
    console.print(f"Logs written to [bold]{run.path}[/bold] ({manifest.name})")
