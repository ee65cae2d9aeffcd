"""Boid motion: damped stochastic double integrator with explicit forward Euler.

All functions broadcast over leading axes, so the same code serves a single
boid and the whole population of slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class KinematicState:
    """Position ``q``, velocity ``v`` (both ``(..., 2)``), heading and angular velocity."""

    q: NDArray[np.float64]
    v: NDArray[np.float64]
    theta: NDArray[np.float64]
    omega: NDArray[np.float64]


@dataclass(frozen=True)
class ControlSignal:
    """Raw controller readouts and the effective thrust/torque derived from them."""

    a_s: NDArray[np.float64]
    a_u: NDArray[np.float64]
    s: NDArray[np.float64]
    u: NDArray[np.float64]


def wrap_angle(theta: ArrayLike) -> NDArray[np.float64]:
    """Wrap angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.pi - np.mod(np.pi - theta, 2.0 * np.pi)


def clamp_norm(x: ArrayLike, limit: float) -> NDArray[np.float64]:
    """Radially rescale vectors along the last axis whose norm exceeds ``limit``."""
    x = np.asarray(x, dtype=np.float64)
    norm = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.where(norm > limit, limit / np.where(norm > 0.0, norm, 1.0), 1.0)
    return x * scale


def apply_control(
    a_s: ArrayLike,
    a_u: ArrayLike,
    noise: ArrayLike,
    epsilon: float,
    d_b: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Map readouts to thrust ``s`` and torque ``u`` with multiplicative noise.

    ``noise`` has a trailing axis of length 2: ``(xi_s, xi_u)``.
    """
    noise = np.asarray(noise, dtype=np.float64)
    s = 0.5 * d_b * np.tanh(a_s) * (1.0 + epsilon * noise[..., 0])
    u = np.tanh(a_u) * (1.0 + epsilon * noise[..., 1])
    return s, u


def integrate_step(
    state: KinematicState,
    s: ArrayLike,
    u: ArrayLike,
    lam: float,
    dt: float,
    *,
    q_max: float = 10_000.0,
    v_max: float = 20.0,
    omega_max: float = np.pi / 3,
) -> KinematicState:
    """Advance one explicit Euler step, then clamp ``q``, ``v`` and ``omega``.

    Every derivative is evaluated at the time-t state.
    """
    s = np.asarray(s, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    heading = np.stack([np.cos(state.theta), np.sin(state.theta)], axis=-1)

    q = state.q + dt * state.v
    v = state.v + dt * (s[..., None] * heading - lam * state.v)
    theta = wrap_angle(state.theta + dt * state.omega)
    omega = state.omega + dt * (u - lam * state.omega)

    return KinematicState(
        q=clamp_norm(q, q_max),
        v=clamp_norm(v, v_max),
        theta=theta,
        omega=np.clip(omega, -omega_max, omega_max),
    )
