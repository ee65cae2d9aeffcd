"""Pydantic models for the files a run writes.

Float lists are serialised with Python's shortest round-trip repr, so every
genome entry reloads bit-identically.
"""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

SCHEMA_VERSION = 1


# --- Checkpoint ---


class CmaSnapshot(BaseModel):
    """CMA-ES state needed to continue a search.

    The covariance matrix lives in a side ``.npz`` file named by ``covariance_file``.
    """

    sigma: float
    generation: int
    eigen_generation: int = 0
    mean: list[float]
    p_sigma: list[float]
    p_c: list[float]
    covariance_file: str | None = None


class CheckpointHeader(BaseModel):
    """Genome dimensions and provenance."""

    model_config = ConfigDict(extra="forbid")

    n: int
    r: int
    l: int
    h: int
    genome_length: int
    schema_version: int = SCHEMA_VERSION
    seed: int | None = None
    generation: int = 0
    best_fitness: float | None = None  # None: never evaluated
    cma_state: CmaSnapshot | None = None


class Checkpoint(BaseModel):
    """Single JSON document: header followed by the flat genome."""

    header: CheckpointHeader
    genome: list[float]


# --- Run manifest ---


class RunManifest(BaseModel):
    """Everything needed to reproduce the primary outputs of a run directory."""

    schema_version: int = SCHEMA_VERSION
    package_version: str
    command: str
    argv: list[str] = Field(default_factory=list)
    config: dict[str, Any]
    seeds: list[int]
    threads: int = 1
    checkpoints: list[str] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    started_at: str
    finished_at: str | None = None
