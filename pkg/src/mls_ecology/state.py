"""Struct-of-arrays population over a fixed number of slots."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from numpy.typing import NDArray

from .dynamics import KinematicState
from .neural import ControllerState


@dataclass
class Population:
    """Every per-boid quantity, one row per slot.

    Inactive slots hold zeros in every field.
    """

    # lifecycle
    active: NDArray[np.bool_]
    immortal: NDArray[np.bool_]
    age: NDArray[np.int64]
    birth_streak: NDArray[np.int64]
    death_streak: NDArray[np.int64]
    # kinematics
    q: NDArray[np.float64]
    v: NDArray[np.float64]
    theta: NDArray[np.float64]
    omega: NDArray[np.float64]
    # controller
    z: NDArray[np.float64]
    z_bar: NDArray[np.float64]
    J: NDArray[np.float64]
    # resources
    e: NDArray[np.float64]
    e_g: NDArray[np.float64]
    e_e: NDArray[np.float64]
    e_c: NDArray[np.float64]
    ebar: NDArray[np.float64]
    ebar_g: NDArray[np.float64]
    ebar_e: NDArray[np.float64]
    ebar_c: NDArray[np.float64]
    ebar_e_plus: NDArray[np.float64]
    m: NDArray[np.float64]

    @classmethod
    def empty(cls, n_slots: int, n: int) -> Population:
        def f(*shape: int) -> NDArray[np.float64]:
            return np.zeros((n_slots, *shape))

        def i() -> NDArray[np.int64]:
            return np.zeros(n_slots, dtype=np.int64)

        def flag() -> NDArray[np.bool_]:
            return np.zeros(n_slots, dtype=bool)

        return cls(
            active=flag(),
            immortal=flag(),
            age=i(),
            birth_streak=i(),
            death_streak=i(),
            q=f(2),
            v=f(2),
            theta=f(),
            omega=f(),
            z=f(n),
            z_bar=f(n),
            J=f(n, n),
            e=f(),
            e_g=f(),
            e_e=f(),
            e_c=f(),
            ebar=f(),
            ebar_g=f(),
            ebar_e=f(),
            ebar_c=f(),
            ebar_e_plus=f(),
            m=f(),
        )

    @property
    def n_slots(self) -> int:
        return self.active.shape[0]

    def copy(self) -> Population:
        return Population(**{fd.name: getattr(self, fd.name).copy() for fd in fields(self)})

    def clear(self, mask: NDArray[np.bool_]) -> None:
        """Return the selected slots to the all-zero dormant state."""
        for fd in fields(self):
            getattr(self, fd.name)[mask] = 0

    def kinematics(self) -> KinematicState:
        return KinematicState(q=self.q, v=self.v, theta=self.theta, omega=self.omega)

    def controller(self) -> ControllerState:
        return ControllerState(z=self.z, z_bar=self.z_bar, J=self.J)
