"""Role labels, role proportions, resource series, smoothing and ablations."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import RolloutConfig
from .engine import Simulation
from .neural import UniformMutation, genome_length
from .rng import stream
from .state import Population

logger = logging.getLogger(__name__)

INACTIVE = "-"


class Role(Enum):
    """Resource channel a boid is currently living off."""

    EXCHANGE = "E"
    GRAZING = "G"
    SUBOPTIMAL = "S"


ROLE_ORDER = (Role.EXCHANGE, Role.GRAZING, Role.SUBOPTIMAL)


class AblationSetting(Enum):
    FULL = "Full"
    SUBSTRATE_ONLY = "SubstrateOnly"  # trained substrate, uniform-noise mutation
    RANDOM_ALL = "RandomAll"  # prior-sampled substrate, uniform-noise mutation


def classify_role(ebar_e_plus: float, ebar_g: float, ebar_c: float) -> Role:
    """Strict dominance; ties fall to `Role.SUBOPTIMAL`."""
    if ebar_e_plus > ebar_g and ebar_e_plus > ebar_c:
        return Role.EXCHANGE
    if ebar_g > ebar_e_plus and ebar_g > ebar_c:
        return Role.GRAZING
    return Role.SUBOPTIMAL


def classify_roles(
    ebar_e_plus: ArrayLike, ebar_g: ArrayLike, ebar_c: ArrayLike, active: ArrayLike
) -> NDArray[np.str_]:
    """Vectorised `classify_role` returning role codes, ``-`` for inactive slots."""
    x = np.asarray(ebar_e_plus, dtype=np.float64)
    g = np.asarray(ebar_g, dtype=np.float64)
    c = np.asarray(ebar_c, dtype=np.float64)
    codes = np.full(x.shape, Role.SUBOPTIMAL.value, dtype="<U1")
    codes[(x > g) & (x > c)] = Role.EXCHANGE.value
    codes[(g > x) & (g > c)] = Role.GRAZING.value
    codes[~np.asarray(active, dtype=bool)] = INACTIVE
    return codes


def population_roles(pop: Population) -> NDArray[np.str_]:
    return classify_roles(pop.ebar_e_plus, pop.ebar_g, pop.ebar_c, pop.active)


def role_proportions(codes: ArrayLike) -> NDArray[np.float64]:
    """Fractions of active boids per role, one row per step.

    ``codes`` is a (steps, slots) array of role codes. Columns follow
    `ROLE_ORDER`; a step without active boids yields a zero row.
    """
    codes = np.atleast_2d(np.asarray(codes))
    counts = np.stack([(codes == role.value).sum(axis=1) for role in ROLE_ORDER], axis=1)
    active = counts.sum(axis=1, keepdims=True)
    return np.divide(
        counts, active, out=np.zeros(counts.shape, dtype=np.float64), where=active > 0
    )


def both_roles_fraction(proportions: ArrayLike, burn_in: int = 0) -> float:
    """Fraction of steps from ``burn_in`` on where Exchange and Grazing coexist."""
    p = np.asarray(proportions, dtype=np.float64)[burn_in:]
    if p.shape[0] == 0:
        return 0.0
    return float(np.mean((p[:, 0] > 0) & (p[:, 1] > 0)))


def generation_exchange_metric(
    positive_exchange: Iterable[float], n_max: int, steps: int
) -> float:
    """Mean positive exchange per slot and step.

    ``positive_exchange`` holds one ``sum_t sum_i max(0, e_e)`` total per
    rollout (group x scenario); inactive slots count as zero.
    """
    totals = np.asarray(list(positive_exchange), dtype=np.float64)
    if totals.size == 0 or steps == 0:
        return 0.0
    return float(totals.sum() / (totals.size * n_max * steps))


def net_resource_series(
    e_g: ArrayLike, e_c: ArrayLike, n_max: int, active: ArrayLike | None = None
) -> NDArray[np.float64]:
    """``(1 / N_max) sum_i (e_g - e_c)`` per step from (steps, slots) logs.

    Without ``active`` every slot counts; logged channels of idle slots are zero.
    """
    e_g = np.atleast_2d(np.asarray(e_g, dtype=np.float64))
    e_c = np.atleast_2d(np.asarray(e_c, dtype=np.float64))
    if active is None:
        return (e_g - e_c).sum(axis=1) / n_max
    mask = np.atleast_2d(np.asarray(active, dtype=bool))
    return np.where(mask, e_g - e_c, 0.0).sum(axis=1) / n_max


def smooth(series: ArrayLike, bins: int) -> NDArray[np.float64]:
    """Trailing moving average over ``bins`` samples (shorter window at the start)."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0 or bins <= 1:
        return x.copy()
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - bins, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


# --- Ablation ---


@dataclass(frozen=True)
class AblationRun:
    """Per-step series of one ablation rollout, normalised by ``N_max``."""

    setting: AblationSetting
    seed: int
    e_plus: NDArray[np.float64]
    e_eplus: NDArray[np.float64]

    @property
    def mean_e_plus(self) -> float:
        return float(self.e_plus.mean()) if self.e_plus.size else 0.0


def prior_genome(config: RolloutConfig, seed: int, sigma0: float) -> NDArray[np.float64]:
    """A genome drawn from the search's initial distribution ``N(0, sigma0^2 I)``."""
    dim = genome_length(config.n, config.r, config.l, config.h)
    return sigma0 * stream(seed, "prior").standard_normal(dim)


def ablation_simulation(
    setting: AblationSetting,
    genome: ArrayLike,
    config: RolloutConfig,
    seed: int,
    *,
    noise_bound: float = 0.05,
    sigma0: float = 0.1,
) -> Simulation:
    if setting is AblationSetting.FULL:
        return Simulation.from_genome(config, genome, seed)
    if setting is AblationSetting.RANDOM_ALL:
        genome = prior_genome(config, seed, sigma0)
    return Simulation.from_genome(config, genome, seed, mutation=UniformMutation(noise_bound))


def run_ablation_rollout(
    setting: AblationSetting,
    genome: ArrayLike,
    config: RolloutConfig,
    seed: int,
    noise_bound: float = 0.05,
    sigma0: float = 0.1,
) -> AblationRun:
    simulation = ablation_simulation(
        setting, genome, config, seed, noise_bound=noise_bound, sigma0=sigma0
    )
    metrics = simulation.run()
    logger.info(
        "ablation %s seed %d: %d births, %d deaths", setting.value, seed, metrics.births, metrics.deaths
    )
    return AblationRun(
        setting=setting,
        seed=seed,
        e_plus=np.asarray(metrics.e_plus, dtype=np.float64) / config.N_max,
        e_eplus=np.asarray(metrics.e_eplus, dtype=np.float64) / config.N_max,
    )


def _ablation_job(args: tuple) -> AblationRun:
    return run_ablation_rollout(*args)


def run_ablation(
    genome: ArrayLike,
    config: RolloutConfig,
    seeds: Sequence[int],
    *,
    noise_bound: float = 0.05,
    sigma0: float = 0.1,
    settings: Sequence[AblationSetting] = tuple(AblationSetting),
    workers: int = 1,
) -> list[AblationRun]:
    """Run every setting for every seed; results are ordered setting-major.

    The series are raw; smoothing is left to the writer.
    """
    genome = np.asarray(genome, dtype=np.float64)
    jobs = [
        (setting, genome, config, int(seed), noise_bound, sigma0)
        for setting in settings
        for seed in seeds
    ]
    if workers <= 1:
        return [_ablation_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_ablation_job, jobs))
