"""Ablate command: compare the trained group with degraded variants."""

from __future__ import annotations

from pathlib import Path

import click
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .analysis import AblationRun, AblationSetting, run_ablation
from .checkpoint import CheckpointError, check_compatible, checkpoint_genome, load_checkpoint
from .formatting import ABLATION_COLUMNS, ablation_rows, write_csv
from .runs import RunDirectory, resolve_config

console = Console()


def _summary_table(runs: list[AblationRun]) -> Table:
    table = Table(box=None)
    table.add_column("SETTING", style="bold")
    table.add_column("SEED", justify="right")
    table.add_column("MEAN E+", justify="right")
    table.add_column("MEAN E_E+", justify="right")
    for run in runs:
        e_eplus = float(run.e_eplus.mean()) if run.e_eplus.size else 0.0
        table.add_row(run.setting.value, str(run.seed), f"{run.mean_e_plus:.4f}", f"{e_eplus:.4f}")
    return table


@click.command()
@click.argument("checkpoint", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="JSON configuration file.",
)
@click.option("--seeds", type=click.IntRange(min=1), default=3, help="Seeds per setting.")
@click.option("--seed", "base_seed", type=click.IntRange(min=0), default=0, help="First scenario seed.")
@click.option("--steps", type=click.IntRange(min=0), help="Rollout length (default 10000).")
@click.option("--n-max", type=click.IntRange(min=1), help="Population slots (default 100).")
@click.option("--noise-bound", type=click.FloatRange(min=0), help="Uniform mutation bound.")
@click.option("--bins", type=click.IntRange(min=1), help="Smoothing window in steps.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory.")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=1,
    envvar="MLS_THREADS",
    show_envvar=True,
    help="Worker processes for rollouts.",
)
def ablate(
    checkpoint: Path,
    config_file: Path | None,
    seeds: int,
    base_seed: int,
    steps: int | None,
    n_max: int | None,
    noise_bound: float | None,
    bins: int | None,
    out: Path | None,
    threads: int,
) -> None:
    """Run the Full, SubstrateOnly and RandomAll settings for every seed.

    CHECKPOINT is a checkpoint written by [bold]train[/bold]. Writes one
    smoothed CSV per setting.
    """
    base = resolve_config(console, config_file)
    config = resolve_config(
        console,
        config_file,
        {
            "rollout": {
                "T": base.analysis.ablation_steps if steps is None else steps,
                "N_max": base.analysis.ablation_n_max if n_max is None else n_max,
            },
            "analysis": {"ablation_noise": noise_bound, "step_bins": bins},
        },
    )

    try:
        stored = load_checkpoint(checkpoint)
        check_compatible(stored, config.rollout)
    except CheckpointError as e:
        console.print(f"[red]{escape(str(e))}[/red]")
        raise SystemExit(1)

    seed_list = [base_seed + i for i in range(seeds)]
    run = RunDirectory.create("ablate", out, config, seed_list, threads)
    run.manifest.checkpoints.append(str(checkpoint))

    with console.status(f"Running {len(AblationSetting) * seeds} ablation rollouts..."):
        runs = run_ablation(
            checkpoint_genome(stored),
            config.rollout,
            seed_list,
            noise_bound=config.analysis.ablation_noise,
            sigma0=config.evolution.sigma0,
            workers=threads,
        )

    for setting in AblationSetting:
        own = [r for r in runs if r.setting is setting]
        write_csv(
            run.file(f"ablation_{setting.value}.csv"),
            ABLATION_COLUMNS,
            ablation_rows(own, config.analysis.step_bins),
        )
    run.finish()

    console.print(_summary_table(runs))
    console.print(f"Ablation series written to [bold]{run.path}[/bold]")
