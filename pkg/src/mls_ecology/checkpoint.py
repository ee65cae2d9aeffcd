"""Checkpoint reading and writing."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import ValidationError

from .config import RolloutConfig
from .evolution import CMAES, CmaState
from .models import SCHEMA_VERSION, Checkpoint, CheckpointHeader, CmaSnapshot
from .neural import genome_length


class CheckpointError(ValueError):
    """Raised for unreadable or incompatible checkpoints."""


def save_checkpoint(
    path: Path,
    genome: NDArray[np.float64],
    config: RolloutConfig,
    *,
    seed: int | None = None,
    best_fitness: float | None = None,
    es: CMAES | None = None,
) -> Path:
    """Write the genome (and optionally the CMA-ES state) next to each other."""
    path.parent.mkdir(parents=True, exist_ok=True)
    cma: CmaSnapshot | None = None
    if es is not None:
        st = es.state
        cov_path = path.with_suffix(".cma.npz")
        np.savez(cov_path, C=st.C, B=st.B, D=st.D)
        cma = CmaSnapshot(
            sigma=st.sigma,
            generation=st.generation,
            eigen_generation=st.eigen_generation,
            mean=st.mean.tolist(),
            p_sigma=st.p_sigma.tolist(),
            p_c=st.p_c.tolist(),
            covariance_file=cov_path.name,
        )

    checkpoint = Checkpoint(
        header=CheckpointHeader(
            n=config.n,
            r=config.r,
            l=config.l,
            h=config.h,
            genome_length=int(genome.size),
            seed=seed,
            generation=cma.generation if cma else 0,
            best_fitness=best_fitness,
            cma_state=cma,
        ),
        genome=np.asarray(genome, dtype=np.float64).tolist(),
    )
    path.write_text(json.dumps(checkpoint.model_dump(), indent=2))
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        checkpoint = Checkpoint.model_validate(json.loads(path.read_text()))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    header = checkpoint.header
    if header.schema_version != SCHEMA_VERSION:
        raise CheckpointError(
            f"checkpoint schema {header.schema_version} is not supported (expected {SCHEMA_VERSION})"
        )
    expected = genome_length(header.n, header.r, header.l, header.h)
    if header.genome_length != expected or len(checkpoint.genome) != expected:
        raise CheckpointError(
            f"checkpoint genome has {len(checkpoint.genome)} entries, header expects {expected}"
        )
    return checkpoint


def checkpoint_genome(checkpoint: Checkpoint) -> NDArray[np.float64]:
    return np.asarray(checkpoint.genome, dtype=np.float64)


def check_compatible(checkpoint: Checkpoint, config: RolloutConfig) -> None:
    """The configured controller dimensions must match the checkpoint's."""
    header = checkpoint.header
    have = (header.n, header.r, header.l, header.h)
    want = (config.n, config.r, config.l, config.h)
    if have != want:
        raise CheckpointError(
            f"checkpoint dimensions (n, r, l, h) = {have} do not match the config {want}"
        )


def restore_es(
    checkpoint: Checkpoint,
    path: Path,
    popsize: int,
    elite_ratio: float,
    eigen_interval: int | None = None,
) -> CMAES:
    """Rebuild the CMA-ES search stored with a checkpoint.

    ``eigen_interval`` must match the interrupted run for the search to continue unchanged.
    """
    cma = checkpoint.header.cma_state
    if cma is None or cma.covariance_file is None:
        raise CheckpointError(f"{path} carries no CMA-ES state")
    with np.load(path.parent / cma.covariance_file) as arrays:
        state = CmaState(
            mean=np.asarray(cma.mean),
            sigma=cma.sigma,
            C=arrays["C"],
            B=arrays["B"],
            D=arrays["D"],
            p_sigma=np.asarray(cma.p_sigma),
            p_c=np.asarray(cma.p_c),
            generation=cma.generation,
            eigen_generation=cma.eigen_generation,
        )
    return CMAES(
        state.mean, state.sigma, popsize, elite_ratio, eigen_interval=eigen_interval, state=state
    )
