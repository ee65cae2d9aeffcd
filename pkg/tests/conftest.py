"""Pytest configuration and fixtures."""

from __future__ import annotations

import json
import os
from typing import TYPE_CHECKING, Any
from unittest.mock import patch

import numpy as np
import pytest
from click.testing import CliRunner

from mls_ecology.checkpoint import save_checkpoint
from mls_ecology.config import RolloutConfig
from mls_ecology.neural import genome_length

if TYPE_CHECKING:
    from collections.abc import Generator
    from pathlib import Path

TINY_ROLLOUT: dict[str, Any] = {"T": 10, "N_max": 6, "N_min": 2, "n": 3, "r": 3, "l": 1, "h": 3}


@pytest.fixture
def runner() -> CliRunner:
    """Click CLI test runner."""
    return CliRunner()


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Drop MLS_* variables so the host environment cannot change a config."""
    for key in list(os.environ):
        if key.startswith("MLS_"):
            monkeypatch.delenv(key)


@pytest.fixture
def mock_data_dir(tmp_path: Path) -> Generator[Path, None, None]:
    """Point the per-user data directory at a temp directory."""
    with patch("mls_ecology.config.get_data_dir", return_value=tmp_path):
        yield tmp_path


@pytest.fixture
def tiny_config() -> dict[str, Any]:
    """Configuration document small enough for a CLI round trip in seconds."""
    return {
        "rollout": dict(TINY_ROLLOUT),
        "evolution": {"M": 4, "S": 1, "generations": 2, "checkpoint_every": 1},
        "analysis": {
            "generation_bins": 2,
            "step_bins": 3,
            "inference_steps": 12,
            "inference_n_max": 8,
            "ablation_steps": 10,
            "ablation_n_max": 6,
            "burn_in_steps": 4,
        },
    }


@pytest.fixture
def config_file(tmp_path: Path, tiny_config: dict[str, Any]) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(tiny_config))
    return path


@pytest.fixture
def tiny_checkpoint(tmp_path: Path) -> Path:
    """Checkpoint of a random genome for the tiny rollout dimensions."""
    config = RolloutConfig(**TINY_ROLLOUT)
    rng = np.random.default_rng(0)
    genome = 0.5 * rng.normal(size=genome_length(config.n, config.r, config.l, config.h))
    return save_checkpoint(tmp_path / "checkpoints" / "tiny.json", genome, config, seed=0)
