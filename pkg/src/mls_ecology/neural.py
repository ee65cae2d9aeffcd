"""CTRNN controller, mutation-operator MLP and the genome codec.

Genome layout (fixed, checkpoints depend on it)::

    tau_raw (n) | b (n) | E (n x obs_dim, row-major) | D (2 x n, row-major)
    | for each MLP layer: W (out x in, row-major), bias (out)

MLP layers are ``8 -> h``, ``(l - 1) x (h -> h)``, ``h -> 1``; hidden layers use
tanh, the output is linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

MUTATION_INPUTS = 8
TAU_FLOOR = 1e-3


class GenomeDecodeError(ValueError):
    """Raised when a genome vector does not match the configured layout."""


def sigmoid(x: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softplus(x: ArrayLike) -> NDArray[np.float64]:
    x = np.asarray(x, dtype=np.float64)
    return np.logaddexp(0.0, x)


def observation_dim(r: int) -> int:
    return 2 * r + 10


@dataclass(frozen=True)
class Substrate:
    """Shared controller parameters. ``tau_raw`` is stored as found in the genome."""

    tau_raw: NDArray[np.float64]
    b: NDArray[np.float64]
    E: NDArray[np.float64]
    D: NDArray[np.float64]

    @property
    def tau_z(self) -> NDArray[np.float64]:
        """Decoded, strictly positive rate constants."""
        return softplus(self.tau_raw) + TAU_FLOOR

    @property
    def n(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class MutationNet:
    """MLP weights ``(out, in)`` and biases per layer."""

    weights: tuple[NDArray[np.float64], ...]
    biases: tuple[NDArray[np.float64], ...]

    @classmethod
    def zeros(cls, l: int, h: int) -> MutationNet:
        shapes = mlp_shapes(l, h)
        return cls(
            weights=tuple(np.zeros(shape) for shape in shapes),
            biases=tuple(np.zeros(shape[0]) for shape in shapes),
        )

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class ControllerState:
    """Hidden activations, their moving averages and the recurrent matrix.

    Arrays may carry a leading slot axis.
    """

    z: NDArray[np.float64]
    z_bar: NDArray[np.float64]
    J: NDArray[np.float64]


@dataclass(frozen=True)
class MutationStats:
    """Parent moving averages fed to the mutation operator at birth."""

    z_bar: NDArray[np.float64]
    ebar: float
    ebar_g: float
    ebar_e: float
    ebar_c: float
    m: float


def mlp_shapes(l: int, h: int) -> list[tuple[int, int]]:
    return [(h, MUTATION_INPUTS)] + [(h, h)] * (l - 1) + [(1, h)]


def mlp_parameter_count(l: int, h: int) -> int:
    return sum(o * i + o for o, i in mlp_shapes(l, h))


def substrate_parameter_count(n: int, r: int) -> int:
    return n + n + n * observation_dim(r) + 2 * n


def genome_length(n: int, r: int, l: int, h: int) -> int:
    return substrate_parameter_count(n, r) + mlp_parameter_count(l, h)


def ctrnn_step(
    state: ControllerState,
    substrate: Substrate,
    obs: ArrayLike,
    dt: float,
    tau_zbar: float,
) -> ControllerState:
    """One Euler step of the CTRNN and of the activity moving average."""
    obs = np.asarray(obs, dtype=np.float64)
    recurrent = np.einsum("...xy,...y->...x", state.J, sigmoid(state.z + substrate.b))
    drive = obs @ substrate.E.T
    z = state.z + dt * substrate.tau_z * (recurrent + drive - state.z)
    z_bar = state.z_bar + dt * tau_zbar * (state.z - state.z_bar)
    return ControllerState(z=z, z_bar=z_bar, J=state.J)


def readout(z: ArrayLike, D: ArrayLike) -> NDArray[np.float64]:
    """``tanh(D z)``; the trailing axis holds ``(a_s, a_u)``."""
    return np.tanh(np.asarray(z, dtype=np.float64) @ np.asarray(D, dtype=np.float64).T)


def mutation_forward(net: MutationNet, inputs: ArrayLike) -> NDArray[np.float64]:
    """Evaluate g on inputs with a trailing axis of 8; returns the scalar per input."""
    x = np.asarray(inputs, dtype=np.float64)
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        x = x @ w.T + b
        if i < last:
            x = np.tanh(x)
    return x[..., 0]


def mutation_inputs(J_parent: NDArray[np.float64], stats: MutationStats) -> NDArray[np.float64]:
    """Per-synapse inputs ``[zbar_x, zbar_y, J_xy, ebar, ebar_g, ebar_e, ebar_c, m]``."""
    n = J_parent.shape[0]
    out = np.empty((n, n, MUTATION_INPUTS))
    out[..., 0] = stats.z_bar[:, None]
    out[..., 1] = stats.z_bar[None, :]
    out[..., 2] = J_parent
    out[..., 3] = stats.ebar
    out[..., 4] = stats.ebar_g
    out[..., 5] = stats.ebar_e
    out[..., 6] = stats.ebar_c
    out[..., 7] = stats.m
    return out


def mutate_J(
    J_parent: NDArray[np.float64],
    net: MutationNet,
    stats: MutationStats,
    eta: float,
    noise: ArrayLike,
) -> NDArray[np.float64]:
    """``J_child = J_parent + g(o_xy) * (1 + eta * noise_xy)`` entrywise."""
    g = mutation_forward(net, mutation_inputs(J_parent, stats))
    return J_parent + g * (1.0 + eta * np.asarray(noise, dtype=np.float64))


class MutationOperator(Protocol):
    """Produces a child's recurrent matrix at birth."""

    def mutate(
        self,
        J_parent: NDArray[np.float64],
        stats: MutationStats,
        rng: np.random.Generator,
    ) -> NDArray[np.float64]: ...


@dataclass(frozen=True)
class LearnedMutation:
    """The group's learned operator g with Gaussian multiplicative noise."""

    net: MutationNet
    eta: float

    def mutate(
        self,
        J_parent: NDArray[np.float64],
        stats: MutationStats,
        rng: np.random.Generator,
    ) -> NDArray[np.float64]:
        noise = rng.standard_normal(J_parent.shape)
        return mutate_J(J_parent, self.net, stats, self.eta, noise)


@dataclass(frozen=True)
class UniformMutation:
    """Additive ``U(-bound, bound)`` noise per entry, used by the ablations."""

    bound: float

    def mutate(
        self,
        J_parent: NDArray[np.float64],
        stats: MutationStats,
        rng: np.random.Generator,
    ) -> NDArray[np.float64]:
        if self.bound == 0.0:
            return J_parent.copy()
        return J_parent + rng.uniform(-self.bound, self.bound, size=J_parent.shape)


def flatten(substrate: Substrate, net: MutationNet) -> NDArray[np.float64]:
    parts = [
        substrate.tau_raw.ravel(),
        substrate.b.ravel(),
        substrate.E.ravel(),
        substrate.D.ravel(),
    ]
    for w, b in zip(net.weights, net.biases):
        parts.extend([w.ravel(), b.ravel()])
    return np.concatenate(parts).astype(np.float64)


def unflatten(
    genome: ArrayLike, *, n: int, r: int, l: int, h: int
) -> tuple[Substrate, MutationNet]:
    """Decode a genome; raises `GenomeDecodeError` on a length mismatch."""
    genome = np.asarray(genome, dtype=np.float64)
    expected = genome_length(n, r, l, h)
    if genome.ndim != 1 or genome.shape[0] != expected:
        raise GenomeDecodeError(
            f"genome has {genome.size} entries, expected {expected} for n={n}, r={r}, l={l}, h={h}"
        )

    offset = 0

    def take(*shape: int) -> NDArray[np.float64]:
        nonlocal offset
        size = int(np.prod(shape))
        chunk = genome[offset : offset + size].reshape(shape).copy()
        offset += size
        return chunk

    substrate = Substrate(
        tau_raw=take(n), b=take(n), E=take(n, observation_dim(r)), D=take(2, n)
    )
    weights, biases = [], []
    for out_dim, in_dim in mlp_shapes(l, h):
        weights.append(take(out_dim, in_dim))
        biases.append(take(out_dim))
    return substrate, MutationNet(weights=tuple(weights), biases=tuple(biases))
