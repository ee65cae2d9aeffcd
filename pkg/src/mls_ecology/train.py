"""Train command: group-level CMA-ES over genomes, one run per seed."""

from __future__ import annotations

import logging
from pathlib import Path

import click
from rich.console import Console
from rich.markup import escape
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    SpinnerColumn,
    TextColumn,
    TimeElapsedColumn,
    TaskID,
    TimeRemainingColumn,
)

from .checkpoint import (
    CheckpointError,
    check_compatible,
    load_checkpoint,
    restore_es,
    save_checkpoint,
)
from .config import EvolutionConfig, RolloutConfig
from .evolution import CMAES, GenerationRecord, TrainingResult
from .evolution import train as run_training
from .formatting import GENERATION_COLUMNS, format_generation, generation_rows, write_csv
from .runs import RunDirectory, resolve_config

console = Console()
logger = logging.getLogger(__name__)


def _resume(
    path: Path, rollout: RolloutConfig, evolution: EvolutionConfig
) -> tuple[CMAES, int | None]:
    try:
        checkpoint = load_checkpoint(path)
        check_compatible(checkpoint, rollout)
        es = restore_es(
            checkpoint, path, evolution.M, evolution.elite_ratio, evolution.eigen_interval
        )
    except CheckpointError as e:
        console.print(f"[red]Cannot resume:[/red] {escape(str(e))}")
        raise SystemExit(1)
    return es, checkpoint.header.seed


@click.command()
@click.argument(
    "config_file",
    required=False,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--seeds", type=click.IntRange(min=1), default=1, help="Number of training runs.")
@click.option("--seed", "base_seed", type=click.IntRange(min=0), default=0, help="Seed of the first run.")
@click.option("--generations", type=click.IntRange(min=0), help="Generations per run.")
@click.option(
    "--resume",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Continue the search stored in a checkpoint.",
)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory.")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=1,
    envvar="MLS_THREADS",
    show_envvar=True,
    help="Worker processes for rollouts.",
)
def train(
    config_file: Path | None,
    seeds: int,
    base_seed: int,
    generations: int | None,
    resume: Path | None,
    out: Path | None,
    threads: int,
) -> None:
    """Evolve group genomes with CMA-ES.

    CONFIG_FILE is an optional JSON document with rollout, evolution and
    analysis sections. Writes one checkpoint per seed, the per-generation
    records and a manifest.

    Examples:

        mls-ecology train --seeds 3 --generations 100 --out runs/desk

        MLS_ROLLOUT__T=800 mls-ecology train config.json --threads 8
    """
    config = resolve_config(console, config_file, {"evolution": {"generations": generations}})

    es: CMAES | None = None
    if resume is not None:
        if seeds != 1:
            console.print("[red]--resume continues a single run; drop --seeds.[/red]")
            raise SystemExit(1)
        es, stored_seed = _resume(resume, config.rollout, config.evolution)
        base_seed = stored_seed if stored_seed is not None else base_seed

    seed_list = [base_seed + i for i in range(seeds)]
    run = RunDirectory.create("train", out, config, seed_list, threads)
    console.print(f"Training {len(seed_list)} run(s) into [bold]{run.path}[/bold]")

    records: list[GenerationRecord] = []
    results: list[TrainingResult] = []
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        TimeRemainingColumn(),
        console=console,
    ) as progress:
        for seed in seed_list:
            task = progress.add_task(f"seed {seed}", total=config.evolution.generations)
            checkpoint_path = run.checkpoint(f"checkpoint_seed{seed}.json")

            def write_checkpoint(result: TrainingResult, path: Path = checkpoint_path) -> None:
                save_checkpoint(
                    path,
                    result.best_genome,
                    config.rollout,
                    seed=result.seed,
                    best_fitness=result.best_fitness,
                    es=result.es,
                )

            def on_generation(record: GenerationRecord, task: TaskID = task) -> None:
                progress.advance(task)
                logger.info(format_generation(record))

            result = run_training(
                config.rollout,
                config.evolution,
                seed,
                workers=threads,
                es=es,
                checkpoint=write_checkpoint,
                on_generation=on_generation,
            )
            results.append(result)
            records.extend(result.records)

    write_csv(run.file("generations.csv"), GENERATION_COLUMNS, generation_rows(records))
    write_csv(
        run.file("generations_smoothed.csv"),
        GENERATION_COLUMNS,
        generation_rows(records, config.analysis.generation_bins),
    )
    manifest = run.finish()

    for result in results:
        best = "-" if result.best_fitness is None else f"{result.best_fitness:.4f}"
        console.print(f"[green]seed {result.seed}:[/green] best fitness {best}")
    console.print(f"Manifest written to {manifest}")
