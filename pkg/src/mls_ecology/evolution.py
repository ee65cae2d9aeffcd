"""Group-level selection: CMA-ES over genomes, scenario evaluation and training."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .analysis import generation_exchange_metric
from .config import EvolutionConfig, RolloutConfig
from .engine import run_rollout
from .neural import genome_length
from .rng import derive_seed, stream

logger = logging.getLogger(__name__)


@dataclass
class CmaState:
    """Dynamic CMA-ES state. ``B`` and ``D`` are the last eigendecomposition of ``C``."""

    mean: NDArray[np.float64]
    sigma: float
    C: NDArray[np.float64]
    B: NDArray[np.float64]
    D: NDArray[np.float64]
    p_sigma: NDArray[np.float64]
    p_c: NDArray[np.float64]
    generation: int = 0
    eigen_generation: int = 0

    @classmethod
    def initial(cls, mean: ArrayLike, sigma: float) -> CmaState:
        mean = np.array(mean, dtype=np.float64)
        dim = mean.size
        return cls(
            mean=mean,
            sigma=float(sigma),
            C=np.eye(dim),
            B=np.eye(dim),
            D=np.ones(dim),
            p_sigma=np.zeros(dim),
            p_c=np.zeros(dim),
        )


class CMAES:
    """(mu/mu_w, lambda)-CMA-ES with CSA step size and rank-one + rank-mu updates.

    Fitness is maximised. The eigendecomposition is refreshed lazily every
    ``eigen_interval`` generations (default ``ceil(dim / 10)``).
    """

    def __init__(
        self,
        mean: ArrayLike,
        sigma: float,
        popsize: int,
        elite_ratio: float = 0.5,
        eigen_interval: int | None = None,
        state: CmaState | None = None,
    ) -> None:
        self.state = state or CmaState.initial(mean, sigma)
        N = self.state.mean.size
        self.dim = N
        self.popsize = int(popsize)
        self.mu = max(1, math.floor(elite_ratio * popsize))
        self.eigen_interval = eigen_interval or max(1, math.ceil(N / 10))

        weights = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = weights / weights.sum()
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.cc = (4 + self.mueff / N) / (N + 4 + 2 * self.mueff / N)
        self.cs = (self.mueff + 2) / (N + self.mueff + 5)
        self.c1 = 2 / ((N + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((N + 2) ** 2 + self.mueff)
        )
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (N + 1)) - 1) + self.cs
        self.chiN = math.sqrt(N) * (1 - 1 / (4 * N) + 1 / (21 * N**2))

    def ask(self, rng: np.random.Generator) -> NDArray[np.float64]:
        """Sample ``popsize`` candidates as rows."""
        st = self.state
        if st.sigma == 0.0:
            return np.tile(st.mean, (self.popsize, 1))
        z = rng.standard_normal((self.popsize, self.dim))
        return st.mean + st.sigma * ((z * st.D) @ st.B.T)

    def tell(self, genomes: ArrayLike, fitnesses: ArrayLike) -> CmaState:
        """Update the distribution from ranked candidates (higher fitness is better)."""
        X = np.asarray(genomes, dtype=np.float64)
        f = np.asarray(fitnesses, dtype=np.float64)
        f = np.where(np.isfinite(f), f, -np.inf)
        st = self.state
        N = self.dim

        order = np.argsort(-f, kind="stable")
        y = (X[order[: self.mu]] - st.mean) / st.sigma if st.sigma > 0 else np.zeros((self.mu, N))
        y_w = self.weights @ y
        mean = st.mean + st.sigma * y_w

        inv_sqrt_C = (st.B / st.D) @ st.B.T
        p_sigma = (1 - self.cs) * st.p_sigma + math.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * (inv_sqrt_C @ y_w)
        ps_norm = float(np.linalg.norm(p_sigma))
        hsig = (
            ps_norm / math.sqrt(1 - (1 - self.cs) ** (2 * (st.generation + 1))) / self.chiN
            < 1.4 + 2 / (N + 1)
        )
        p_c = (1 - self.cc) * st.p_c + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y_w

        C = (
            (1 - self.c1 - self.cmu) * st.C
            + self.c1 * (np.outer(p_c, p_c) + (1 - hsig) * self.cc * (2 - self.cc) * st.C)
            + self.cmu * (y.T * self.weights) @ y
        )
        sigma = st.sigma * math.exp((self.cs / self.damps) * (ps_norm / self.chiN - 1))

        self.state = CmaState(
            mean=mean,
            sigma=sigma,
            C=C,
            B=st.B,
            D=st.D,
            p_sigma=p_sigma,
            p_c=p_c,
            generation=st.generation + 1,
            eigen_generation=st.eigen_generation,
        )
        if self.state.generation - self.state.eigen_generation >= self.eigen_interval:
            self.decompose()
        return self.state

    def decompose(self) -> None:
        """Symmetrise ``C`` and refresh ``B``, ``D``; eigenvalues are floored to stay PD."""
        st = self.state
        C = 0.5 * (st.C + st.C.T)
        eigvals, B = np.linalg.eigh(C)
        floor = max(float(eigvals.max()) * 1e-14, 1e-300)
        if eigvals.min() <= 0:
            logger.warning("covariance lost definiteness, flooring %d eigenvalues", int((eigvals <= 0).sum()))
            eigvals = np.maximum(eigvals, floor)
            C = (B * eigvals) @ B.T
        st.C = C
        st.B = B
        st.D = np.sqrt(eigvals)
        st.eigen_generation = st.generation


@dataclass(frozen=True)
class Evaluation:
    """Scenario-averaged fitness terms of one genome."""

    f: float
    f_e: float
    f_a: float
    pos_exchange: float


def evaluate_genome(
    genome: ArrayLike, config: RolloutConfig, scenario_seeds: Sequence[int]
) -> Evaluation:
    """Average ``f_e + mu * f_a`` and the auxiliary metrics over scenarios."""
    runs = [run_rollout(config, genome, seed) for seed in scenario_seeds]
    return Evaluation(
        f=float(np.mean([m.fitness(config.mu) for m in runs])),
        f_e=float(np.mean([m.f_e for m in runs])),
        f_a=float(np.mean([m.f_a for m in runs])),
        pos_exchange=float(np.mean([m.pos_exchange_mass for m in runs])),
    )


def _evaluate_job(args: tuple[NDArray[np.float64], RolloutConfig, list[int]]) -> Evaluation:
    return evaluate_genome(*args)


def scenario_seeds(seed: int, generation: int, count: int, fixed: bool) -> list[int]:
    g = 0 if fixed else generation
    return [derive_seed(seed, "scenario", g, s) for s in range(count)]


@dataclass(frozen=True)
class GenerationRecord:
    """Per-generation fitness of every group plus the exchange-usage metric."""

    generation: int
    seed: int
    f: tuple[float, ...]
    f_e: tuple[float, ...]
    f_a: tuple[float, ...]
    e_eplus_mean: float
    non_finite: int = 0

    @property
    def best_index(self) -> int:
        finite = np.where(np.isfinite(self.f), self.f, -np.inf)
        return int(np.argmax(finite))

    @property
    def best_f(self) -> float:
        return self.f[self.best_index]

    @property
    def mean_f(self) -> float:
        finite = [x for x in self.f if math.isfinite(x)]
        return float(np.mean(finite)) if finite else float("nan")

    @property
    def best_f_e(self) -> float:
        return self.f_e[self.best_index]

    @property
    def best_f_a(self) -> float:
        return self.f_a[self.best_index]


@dataclass
class TrainingResult:
    seed: int
    records: list[GenerationRecord] = field(default_factory=list)
    best_genome: NDArray[np.float64] | None = None
    best_fitness: float | None = None
    es: CMAES | None = None


CheckpointWriter = Callable[["TrainingResult"], Any]
GenerationCallback = Callable[[GenerationRecord], None]


def make_es(rollout: RolloutConfig, evolution: EvolutionConfig) -> CMAES:
    dim = genome_length(rollout.n, rollout.r, rollout.l, rollout.h)
    return CMAES(
        mean=np.zeros(dim),
        sigma=evolution.sigma0,
        popsize=evolution.M,
        elite_ratio=evolution.elite_ratio,
        eigen_interval=evolution.eigen_interval,
    )


def train(
    rollout: RolloutConfig,
    evolution: EvolutionConfig,
    seed: int,
    *,
    workers: int = 1,
    es: CMAES | None = None,
    checkpoint: CheckpointWriter | None = None,
    on_generation: GenerationCallback | None = None,
) -> TrainingResult:
    """Ask, evaluate M x S rollouts, tell; repeat for ``evolution.generations``.

    ``checkpoint`` is called with the running result every
    ``evolution.checkpoint_every`` generations and once at the end (also when
    no generation runs). Passing ``es`` continues a stored search from its
    generation counter.
    """
    es = es or make_es(rollout, evolution)
    start = es.state.generation
    result = TrainingResult(seed=seed, best_genome=es.state.mean.copy(), es=es)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for g in range(start, start + evolution.generations):
            genomes = es.ask(stream(seed, "cma", g))
            seeds = scenario_seeds(seed, g, evolution.S, evolution.fixed_scenarios)
            jobs = [(x, rollout, seeds) for x in genomes]
            if pool is None:
                evaluations = [evaluate_genome(*job) for job in jobs]
            else:
                evaluations = list(pool.map(_evaluate_job, jobs))

            f = np.array([ev.f for ev in evaluations])
            non_finite = int((~np.isfinite(f)).sum())
            if non_finite:
                logger.warning(
                    "generation %d: %d candidates with non-finite fitness ranked last", g, non_finite
                )
            es.tell(genomes, f)

            record = GenerationRecord(
                generation=g,
                seed=seed,
                f=tuple(float(x) for x in f),
                f_e=tuple(ev.f_e for ev in evaluations),
                f_a=tuple(ev.f_a for ev in evaluations),
                e_eplus_mean=generation_exchange_metric(
                    [ev.pos_exchange for ev in evaluations], rollout.N_max, rollout.T
                ),
                non_finite=non_finite,
            )
            result.records.append(record)
            if non_finite < len(f) and (
                result.best_fitness is None or record.best_f > result.best_fitness
            ):
                result.best_fitness = record.best_f
                result.best_genome = genomes[record.best_index].copy()

            logger.info("generation %d: best %.4f mean %.4f", g, record.best_f, record.mean_f)
            if on_generation is not None:
                on_generation(record)
            if checkpoint is not None and (g + 1 - start) % evolution.checkpoint_every == 0:
                checkpoint(result)
    finally:
        if pool is not None:
            pool.shutdown()

    if checkpoint is not None:
        checkpoint(result)
    return result
