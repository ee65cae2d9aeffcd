"""Analyze command: recompute role and resource metrics from a trajectory log."""

from __future__ import annotations

from pathlib import Path

import click
import numpy as np
from rich.console import Console
from rich.markup import escape

from .analysis import (
    INACTIVE,
    ROLE_ORDER,
    both_roles_fraction,
    net_resource_series,
    role_proportions,
)
from .formatting import PROPORTION_COLUMNS, proportion_row, read_trajectory, write_csv
from .runs import RunDirectory, resolve_config

console = Console()


@click.command()
@click.argument("trajectory_csv", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON configuration file.",
)
@click.option("--burn-in", type=click.IntRange(min=0), help="Steps skipped for the role census.")
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    help="Write recomputed proportions.csv and net_resource.csv here.",
)
def analyze(
    trajectory_csv: Path, config_file: Path | None, burn_in: int | None, out: Path | None
) -> None:
    """Recompute role proportions and net resource gain from TRAJECTORY_CSV.

    Checks that every active boid-step carries exactly one role and reports
    how often the exchange and grazing roles coexist after the burn-in.
    """
    config = resolve_config(console, config_file, {"analysis": {"burn_in_steps": burn_in}})
    try:
        log = read_trajectory(trajectory_csv)
    except ValueError as e:
        console.print(f"[red]{escape(str(e))}[/red]")
        raise SystemExit(1)

    if log.steps.size == 0:
        console.print("[yellow]Trajectory log has no steps.[/yellow]")
        return

    named = np.isin(log.roles, [role.value for role in ROLE_ORDER])
    bad = (log.active & ~named) | (~log.active & (log.roles != INACTIVE))
    if bad.any():
        console.print(f"[red]{int(bad.sum())} boid-steps with an inconsistent role label.[/red]")
        raise SystemExit(1)

    proportions = role_proportions(log.roles)
    e_plus = net_resource_series(log.e_g, log.e_c, log.n_slots)
    skip = int(np.searchsorted(log.steps, config.analysis.burn_in_steps))
    coexist = both_roles_fraction(proportions, skip)

    console.print(f"[bold]Steps:[/bold]          {log.steps.size} ({log.n_slots} slots)")
    for i, role in enumerate(ROLE_ORDER):
        label = f"{role.name.title()}:"
        console.print(f"[bold]{label:<16}[/bold]{proportions[:, i].mean():.4f}")
    console.print(f"[bold]Mean e+:[/bold]        {e_plus.mean():.6f}")
    if skip >= log.steps.size:
        console.print(
            f"[yellow]No steps after the burn-in of {config.analysis.burn_in_steps}.[/yellow]"
        )
    else:
        console.print(f"[bold]E and G both:[/bold]   {coexist:.4f} of steps after burn-in")

    if out is not None:
        run = RunDirectory.create("analyze", out, config, [])
        write_csv(
            run.file("proportions.csv"),
            PROPORTION_COLUMNS,
            (proportion_row(int(t), p) for t, p in zip(log.steps, proportions)),
        )
        write_csv(
            run.file("net_resource.csv"),
            ["step", "e_plus"],
            ((int(t), float(x)) for t, x in zip(log.steps, e_plus)),
        )
        run.finish()
        console.print(f"Recomputed series written to [bold]{run.path}[/bold]")
