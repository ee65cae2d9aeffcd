"""Desk-scale training and ablation trends.

These run for minutes and are deselected by default; run them with
``pytest -m slow``.
"""

import os

import numpy as np
import pytest

from mls_ecology.analysis import AblationSetting, run_ablation, smooth
from mls_ecology.config import EvolutionConfig, RolloutConfig
from mls_ecology.evolution import TrainingResult, train

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)
ROLLOUT = RolloutConfig(N_max=20, T=800)
EVOLUTION = EvolutionConfig(M=16, S=1, generations=100)


@pytest.fixture(scope="module")
def trained() -> list[TrainingResult]:
    workers = os.cpu_count() or 1
    return [train(ROLLOUT, EVOLUTION, seed, workers=workers) for seed in SEEDS]


def test_best_fitness_rises(trained: list[TrainingResult]) -> None:
    """Smoothed best fitness at the last generation beats the first in most seeds."""
    rising = 0
    for result in trained:
        best = smooth([r.best_f for r in result.records], 5)
        rising += best[-1] > best[0]
    assert rising >= 2


def test_exchange_usage_does_not_fall(trained: list[TrainingResult]) -> None:
    """Exchange usage late in training is at least its early level in most seeds."""
    holding = 0
    for result in trained:
        usage = smooth([r.e_eplus_mean for r in result.records], 5)
        holding += usage[-20:].mean() >= usage[:20].mean()
    assert holding >= 2


def test_ablation_ordering(trained: list[TrainingResult]) -> None:
    """Full >= SubstrateOnly >= RandomAll on mean net resource gain."""
    config = RolloutConfig(N_max=40, T=2000)
    best = max(trained, key=lambda r: r.best_fitness or -np.inf)
    runs = run_ablation(best.best_genome, config, SEEDS, workers=os.cpu_count() or 1)
    mean = {(run.setting, run.seed): run.mean_e_plus for run in runs}

    ordered = sum(
        mean[AblationSetting.FULL, seed]
        >= mean[AblationSetting.SUBSTRATE_ONLY, seed]
        >= mean[AblationSetting.RANDOM_ALL, seed]
        for seed in SEEDS
    )
    assert ordered >= 2
    for seed in SEEDS:
        assert abs(mean[AblationSetting.RANDOM_ALL, seed]) <= 0.05
