"""Rollout orchestration over a fixed set of population slots.

One step runs these phases in order:

1. freeze the time-t snapshot
2. ray sensing and observation assembly
3. CTRNN step, readout (from z(t)) and noisy control
4. motion integration and clamps
5. movement filter and population mean movement
6. grazing, exchange (snapshot depots) and metabolic channels
7. simultaneous depot update and resource moving averages
8. metric accumulation over boids active during the step
9. streak update and births in ascending slot order
10. starvation deaths
11. old-age eliminations
12. ageing of survivors, ``t += 1``
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import RolloutConfig
from .dynamics import ControlSignal, KinematicState, apply_control, integrate_step
from .ecology import (
    LifecycleState,
    age_survivors,
    apply_depot_update,
    exchange_flows,
    free_slots,
    grazing_gain,
    lifecycle_step,
    mean_movement,
    metabolic_cost,
    moving_average,
    overlap_matrix,
    spawn_progeny,
    update_movement,
)
from .neural import (
    LearnedMutation,
    MutationOperator,
    Substrate,
    ctrnn_step,
    readout,
    unflatten,
)
from .rng import stream
from .sensing import assemble_observation, cast_all_rays
from .state import Population

logger = logging.getLogger(__name__)


@dataclass
class World:
    """Population plus the index of the next step to execute."""

    t: int
    population: Population

    def copy(self) -> World:
        return World(t=self.t, population=self.population.copy())


@dataclass(frozen=True)
class StepSummary:
    """Sums over the boids active during one step."""

    t: int
    active_count: int
    e_plus: float  # sum of e_g - e_c
    e_eplus: float  # sum of max(0, e_e)
    age_mass: float
    births: int
    deaths: int
    # per-slot channel values of this step, zero for slots inactive at its start
    e_g: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0), repr=False)
    e_e: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0), repr=False)
    e_c: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0), repr=False)


@dataclass
class RolloutMetrics:
    """Streaming accumulators of one rollout and its per-step series."""

    f_e: float = 0.0
    f_a: float = 0.0
    pos_exchange_mass: float = 0.0
    births: int = 0
    deaths: int = 0
    active_count: list[int] = field(default_factory=list)
    e_plus: list[float] = field(default_factory=list)
    e_eplus: list[float] = field(default_factory=list)

    def add(self, summary: StepSummary) -> None:
        self.f_e += summary.e_plus
        self.f_a += summary.age_mass
        self.pos_exchange_mass += summary.e_eplus
        self.births += summary.births
        self.deaths += summary.deaths
        self.active_count.append(summary.active_count)
        self.e_plus.append(summary.e_plus)
        self.e_eplus.append(summary.e_eplus)

    def fitness(self, mu: float) -> float:
        return self.f_e + mu * self.f_a


StepObserver = Callable[[World, StepSummary], None]


def init_rollout(config: RolloutConfig, seed: int) -> World:
    """N_min immortals in the first slots, every other slot dormant."""
    rng = stream(seed, "init")
    k = config.N_min
    pop = Population.empty(config.N_max, config.n)

    pop.active[:k] = True
    pop.immortal[:k] = True
    pop.q[:k] = rng.uniform(-config.q_init, config.q_init, size=(k, 2))
    pop.theta[:k] = rng.uniform(-np.pi, np.pi, size=k)
    pop.e[:k] = rng.uniform(config.e_init_low, config.e_init_high, size=k)
    pop.ebar[:k] = pop.e[:k]
    pop.J[:k] = rng.uniform(-config.J_init, config.J_init, size=(k, config.n, config.n))
    return World(t=0, population=pop)


def _masked(active: NDArray[np.bool_], values: ArrayLike, fallback: ArrayLike) -> NDArray[np.float64]:
    mask = active.reshape(active.shape + (1,) * (np.ndim(values) - 1))
    return np.where(mask, values, fallback)


class Simulation:
    """A group (substrate + mutation operator) simulated under one scenario seed."""

    def __init__(
        self,
        config: RolloutConfig,
        substrate: Substrate,
        mutation: MutationOperator,
        seed: int,
    ) -> None:
        self.config = config
        self.substrate = substrate
        self.mutation = mutation
        self.seed = int(seed)

    @classmethod
    def from_genome(
        cls,
        config: RolloutConfig,
        genome: ArrayLike,
        seed: int,
        mutation: MutationOperator | None = None,
    ) -> Simulation:
        """Decode a genome; ``mutation`` replaces the decoded learned operator if given."""
        substrate, net = unflatten(genome, n=config.n, r=config.r, l=config.l, h=config.h)
        return cls(config, substrate, mutation or LearnedMutation(net, config.eta), seed)

    def init(self) -> World:
        return init_rollout(self.config, self.seed)

    def step(self, world: World) -> tuple[World, StepSummary]:
        """Advance one step; ``world`` is left untouched."""
        cfg = self.config
        t = world.t
        snap = world.population  # (1) frozen snapshot
        pop = snap.copy()
        active = snap.active.copy()
        zero = np.zeros(cfg.N_max)

        # (2) sensing
        d, e_hit = cast_all_rays(
            snap.q,
            snap.theta,
            snap.e,
            active,
            r=cfg.r,
            fov=cfg.fov,
            d_max=cfg.d_max,
            radius=cfg.radius,
        )
        w = overlap_matrix(snap.q, active, cfg.d_b).sum(axis=1)
        m_N_prev = mean_movement(snap.m, active)
        body = np.column_stack(
            [
                snap.v[:, 0],
                snap.v[:, 1],
                snap.omega,
                snap.m,
                np.full(cfg.N_max, m_N_prev),
                snap.e,
                snap.e_g,
                snap.e_e,
                snap.e_c,
                w,
            ]
        )
        obs = assemble_observation(d, e_hit, body)

        # (3) controller and control
        controller = ctrnn_step(snap.controller(), self.substrate, obs, cfg.dt, cfg.tau_zbar)
        a = readout(snap.z, self.substrate.D)
        noise = stream(self.seed, "control", t).standard_normal((cfg.N_max, 2))
        s, u = apply_control(a[:, 0], a[:, 1], noise, cfg.epsilon, cfg.d_b)
        control = ControlSignal(
            a_s=a[:, 0], a_u=a[:, 1], s=np.where(active, s, 0.0), u=np.where(active, u, 0.0)
        )
        pop.z = _masked(active, controller.z, snap.z)
        pop.z_bar = _masked(active, controller.z_bar, snap.z_bar)

        # (4) motion
        moved = integrate_step(
            snap.kinematics(),
            control.s,
            control.u,
            cfg.lam,
            cfg.dt,
            q_max=cfg.q_max,
            v_max=cfg.v_max,
            omega_max=cfg.omega_max,
        )
        kin = KinematicState(
            q=_masked(active, moved.q, snap.q),
            v=_masked(active, moved.v, snap.v),
            theta=_masked(active, moved.theta, snap.theta),
            omega=_masked(active, moved.omega, snap.omega),
        )
        pop.q, pop.v, pop.theta, pop.omega = kin.q, kin.v, kin.theta, kin.omega

        # (5) movement
        pop.m = _masked(active, update_movement(snap.m, kin.v, kin.omega, cfg.tau_m, cfg.dt), zero)
        m_N = mean_movement(pop.m, active)

        # (6) channels on the snapshot depots
        e_g = _masked(active, grazing_gain(pop.m, m_N, cfg.k_g, cfg.e_g_max), zero)
        positions = kin.q if cfg.exchange_positions == "post_move" else snap.q
        e_e = exchange_flows(
            snap.e, positions, active, cfg.d_b, cfg.k_e, cfg.e_e_max, cfg.exchange_mode
        )
        e_c = _masked(
            active, metabolic_cost(control.s, control.u, snap.e, cfg.k_cs, cfg.k_cu, cfg.gamma), zero
        )

        # (7) simultaneous depot update and moving averages
        pop.e = _masked(active, apply_depot_update(snap.e, e_g, e_e, e_c, cfg.e_max), zero)
        pop.e_g, pop.e_e, pop.e_c = e_g, e_e, e_c
        tau, dt = cfg.tau_ebar, cfg.dt
        pop.ebar = _masked(active, moving_average(snap.ebar, pop.e, tau, dt), zero)
        pop.ebar_g = _masked(active, moving_average(snap.ebar_g, e_g, tau, dt), zero)
        pop.ebar_e = _masked(active, moving_average(snap.ebar_e, e_e, tau, dt), zero)
        pop.ebar_c = _masked(active, moving_average(snap.ebar_c, e_c, tau, dt), zero)
        pop.ebar_e_plus = _masked(
            active, moving_average(snap.ebar_e_plus, np.maximum(e_e, 0.0), tau, dt), zero
        )

        # (8) metrics over boids active during this step
        e_plus = float(np.sum(e_g[active] - e_c[active]))
        e_eplus = float(np.sum(np.maximum(e_e[active], 0.0)))
        age_mass = float(np.sum(snap.age[active]))

        # (9) births, ascending slot order
        lifecycle, events = lifecycle_step(
            LifecycleState(
                age=pop.age,
                active=pop.active,
                immortal=pop.immortal,
                birth_streak=pop.birth_streak,
                death_streak=pop.death_streak,
            ),
            pop.e,
            cfg,
            stream(self.seed, "old_age", t).uniform(size=cfg.N_max),
        )
        pop.birth_streak = lifecycle.birth_streak.copy()
        pop.death_streak = lifecycle.death_streak.copy()

        births = 0
        for parent in np.flatnonzero(events.birth_eligible):
            free = free_slots(pop)
            if free.size == 0:
                logger.debug("step %d: no free slot, %d births deferred", t, events.birth_eligible.sum() - births)
                break
            child = int(free[0])
            spawn_progeny(
                pop, int(parent), child, self.mutation, cfg, stream(self.seed, "birth", t, child)
            )
            births += 1

        # (10) starvation, (11) old age
        starved = events.starved & active
        pop.clear(starved)
        old = events.old_age & active & pop.active
        pop.clear(old)
        deaths = int(starved.sum() + old.sum())

        # (12)
        age_survivors(pop, active)
        summary = StepSummary(
            t=t,
            active_count=int(active.sum()),
            e_plus=e_plus,
            e_eplus=e_eplus,
            age_mass=age_mass,
            births=births,
            deaths=deaths,
            e_g=e_g,
            e_e=e_e,
            e_c=e_c,
        )
        return World(t=t + 1, population=pop), summary

    def run(
        self,
        steps: int | None = None,
        observer: StepObserver | None = None,
        world: World | None = None,
    ) -> RolloutMetrics:
        """Run ``steps`` (default ``config.T``) steps and return the accumulated metrics."""
        steps = self.config.T if steps is None else steps
        world = self.init() if world is None else world
        metrics = RolloutMetrics()
        for _ in range(steps):
            world, summary = self.step(world)
            metrics.add(summary)
            if observer is not None:
                observer(world, summary)
        return metrics


def step(world: World, simulation: Simulation) -> World:
    """Functional form of `Simulation.step`."""
    return simulation.step(world)[0]


def run_rollout(
    config: RolloutConfig,
    genome: ArrayLike,
    seed: int,
    *,
    mutation: MutationOperator | None = None,
    observer: StepObserver | None = None,
) -> RolloutMetrics:
    """Simulate one scenario of ``config.T`` steps for a genome."""
    return Simulation.from_genome(config, genome, seed, mutation).run(observer=observer)
