"""Resource channels, depot update and the birth/death lifecycle.

Channel functions are vectorised over slots and read a frozen pre-step
snapshot; lifecycle events are committed sequentially in ascending slot order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import RolloutConfig
from .dynamics import clamp_norm, wrap_angle
from .neural import MutationOperator, MutationStats
from .state import Population

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResourceState:
    """Depot, last-step channel values and their moving averages for one boid."""

    e: float
    e_g: float = 0.0
    e_e: float = 0.0
    e_c: float = 0.0
    ebar: float = 0.0
    ebar_g: float = 0.0
    ebar_e: float = 0.0
    ebar_c: float = 0.0
    ebar_e_plus: float = 0.0
    m: float = 0.0


@dataclass(frozen=True)
class LifecycleState:
    """Age, flags and the uninterrupted-threshold counters (arrays over slots)."""

    age: NDArray[np.int64]
    active: NDArray[np.bool_]
    immortal: NDArray[np.bool_]
    birth_streak: NDArray[np.int64]
    death_streak: NDArray[np.int64]


@dataclass(frozen=True)
class LifecycleEvents:
    """Per-slot outcome masks of one lifecycle step."""

    birth_eligible: NDArray[np.bool_]
    starved: NDArray[np.bool_]
    old_age: NDArray[np.bool_]


def update_movement(
    m: ArrayLike, v: ArrayLike, omega: ArrayLike, tau_m: float, dt: float
) -> NDArray[np.float64]:
    m = np.asarray(m, dtype=np.float64)
    speed = np.linalg.norm(np.asarray(v, dtype=np.float64), axis=-1) + np.abs(omega)
    return m + dt * tau_m * (speed - m)


def mean_movement(m: ArrayLike, active: ArrayLike) -> float:
    """Mean movement over active slots only."""
    m = np.asarray(m, dtype=np.float64)
    active = np.asarray(active, dtype=bool)
    count = int(active.sum())
    if count == 0:
        return 0.0
    return float(m[active].sum() / count)


def grazing_gain(m_i: ArrayLike, m_N: float, k_g: float, cap: float) -> NDArray[np.float64]:
    return np.clip(k_g * (m_N - np.asarray(m_i, dtype=np.float64)), 0.0, cap)


def overlap_matrix(positions: ArrayLike, active: ArrayLike, d_b: float) -> NDArray[np.bool_]:
    """``delta_ij``: active pairs closer than one diameter, diagonal excluded."""
    q = np.asarray(positions, dtype=np.float64)
    active = np.asarray(active, dtype=bool)
    diff = q[:, None, :] - q[None, :, :]
    close = np.einsum("ijk,ijk->ij", diff, diff) < d_b * d_b
    mask = close & active[:, None] & active[None, :]
    np.fill_diagonal(mask, False)
    return mask


def exchange_flows(
    depots: ArrayLike,
    positions: ArrayLike,
    active: ArrayLike,
    d_b: float,
    k_e: float,
    cap: float,
    mode: Literal["antisymmetric", "net_clip"] = "antisymmetric",
) -> NDArray[np.float64]:
    """Net exchange per slot from pairwise transfers on the given depots.

    ``antisymmetric`` caps every pair transfer to ``[-cap, cap]`` so the sum over
    slots is zero. ``net_clip`` clips the uncapped net per boid to ``[0, cap]``.
    """
    e = np.asarray(depots, dtype=np.float64)
    delta = overlap_matrix(positions, active, d_b)
    raw = k_e * (e[None, :] - e[:, None])  # t_ij: what i receives from j
    if mode == "net_clip":
        return np.clip(np.where(delta, raw, 0.0).sum(axis=1), 0.0, cap)
    return np.where(delta, np.clip(raw, -cap, cap), 0.0).sum(axis=1)


def metabolic_cost(
    s: ArrayLike, u: ArrayLike, e: ArrayLike, k_cs: float, k_cu: float, gamma: float
) -> NDArray[np.float64]:
    return k_cs * np.abs(s) + k_cu * np.abs(u) + gamma * np.asarray(e, dtype=np.float64)


def apply_depot_update(
    e: ArrayLike, e_g: ArrayLike, e_e: ArrayLike, e_c: ArrayLike, e_max: float
) -> NDArray[np.float64]:
    e = np.asarray(e, dtype=np.float64)
    return np.clip(e + e_g + e_e - e_c, 0.0, e_max)


def moving_average(avg: ArrayLike, value: ArrayLike, tau: float, dt: float) -> NDArray[np.float64]:
    avg = np.asarray(avg, dtype=np.float64)
    return avg + dt * tau * (np.asarray(value, dtype=np.float64) - avg)


def old_age_probability(age: ArrayLike, a_min_old: int, a_max_old: int) -> NDArray[np.float64]:
    age = np.asarray(age, dtype=np.float64)
    return np.clip((age - a_min_old) / (a_max_old - a_min_old), 0.0, 1.0)


def lifecycle_step(
    state: LifecycleState,
    e: ArrayLike,
    config: RolloutConfig,
    uniforms: ArrayLike,
) -> tuple[LifecycleState, LifecycleEvents]:
    """Advance the threshold streaks and flag births, starvation and old-age deaths.

    ``uniforms`` are one U[0, 1) draw per slot for the old-age Bernoulli trial.
    Ages are not incremented here; see `age_survivors`.
    """
    e = np.asarray(e, dtype=np.float64)
    active = state.active
    birth_streak = np.where(active & (e >= config.e_birth), state.birth_streak + 1, 0)
    death_streak = np.where(active & (e <= config.e_death), state.death_streak + 1, 0)
    mortal = active & ~state.immortal

    p_old = old_age_probability(state.age, config.a_min_old, config.a_max_old)
    events = LifecycleEvents(
        birth_eligible=active & (birth_streak >= config.t_birth),
        starved=mortal & (death_streak >= config.t_death),
        old_age=mortal & (state.age > config.a_min_old) & (np.asarray(uniforms) < p_old),
    )
    updated = LifecycleState(
        age=state.age,
        active=active,
        immortal=state.immortal,
        birth_streak=birth_streak,
        death_streak=death_streak,
    )
    return updated, events


def spawn_progeny(
    pop: Population,
    parent: int,
    child: int,
    mutation: MutationOperator,
    config: RolloutConfig,
    rng: np.random.Generator,
) -> None:
    """Write a fresh child into the dormant slot ``child`` and halve the parent's depot.

    Mutates ``pop`` in place. The child's state is rebuilt field by field, so
    nothing of a previous occupant survives.
    """
    if pop.active[child]:
        raise ValueError(f"slot {child} is occupied")

    parent_state = resource_state(pop, parent)
    stats = MutationStats(
        z_bar=pop.z_bar[parent].copy(),
        ebar=parent_state.ebar,
        ebar_g=parent_state.ebar_g,
        ebar_e=parent_state.ebar_e,
        ebar_c=parent_state.ebar_c,
        m=parent_state.m,
    )
    J_child = mutation.mutate(pop.J[parent].copy(), stats, rng)

    radius = config.d_spawn * np.sqrt(rng.uniform())
    angle = rng.uniform(-np.pi, np.pi)
    offset = radius * np.array([np.cos(angle), np.sin(angle)])
    heading = wrap_angle(rng.uniform(-np.pi, np.pi))

    half = 0.5 * pop.e[parent]
    pop.e[parent] = half
    pop.birth_streak[parent] = 0

    pop.clear(np.arange(pop.n_slots) == child)
    pop.active[child] = True
    pop.q[child] = clamp_norm(pop.q[parent] + offset, config.q_max)
    pop.theta[child] = heading
    pop.J[child] = J_child
    pop.e[child] = half
    # moving averages start at the instantaneous values (channels and m are zero)
    pop.ebar[child] = half
    logger.debug(
        "slot %d spawned child in slot %d (depot %.3f, parent %s)", parent, child, half, parent_state
    )


def free_slots(pop: Population) -> NDArray[np.intp]:
    return np.flatnonzero(~pop.active)


def age_survivors(pop: Population, was_active: NDArray[np.bool_]) -> None:
    """Age every boid that was active at the start of the step and still is."""
    pop.age[was_active & pop.active] += 1


def resource_state(pop: Population, slot: int) -> ResourceState:
    """Snapshot of one slot's resource fields."""
    return ResourceState(
        e=float(pop.e[slot]),
        e_g=float(pop.e_g[slot]),
        e_e=float(pop.e_e[slot]),
        e_c=float(pop.e_c[slot]),
        ebar=float(pop.ebar[slot]),
        ebar_g=float(pop.ebar_g[slot]),
        ebar_e=float(pop.ebar_e[slot]),
        ebar_c=float(pop.ebar_c[slot]),
        ebar_e_plus=float(pop.ebar_e_plus[slot]),
        m=float(pop.m[slot]),
    )
