"""Ray sensors with occlusion over circular boids, and observation assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

BODY_FIELDS = 10


@dataclass(frozen=True)
class RayReading:
    """Distance to the nearest struck boid and that boid's depot."""

    d: float
    e_hit: float


def ray_offsets(r: int, fov: float) -> NDArray[np.float64]:
    """Equiangular ray offsets spanning ``fov`` around the heading, endpoints included."""
    if r == 1:
        return np.zeros(1)
    return np.linspace(-0.5 * fov, 0.5 * fov, r)


def _hit_distances(
    origins: NDArray[np.float64],
    directions: NDArray[np.float64],
    centers: NDArray[np.float64],
    radius: float,
) -> NDArray[np.float64]:
    """Ray-circle quadratic test for every (source, ray, target) triple.

    ``origins`` is ``(B, 2)``, ``directions`` ``(B, r, 2)`` unit vectors,
    ``centers`` ``(N, 2)``. Returns ``(B, r, N)`` distances, ``inf`` on a miss.
    A ray starting inside a circle reports distance 0 for it.
    """
    f = origins[:, None, :] - centers[None, :, :]  # (B, N, 2)
    c = np.einsum("bnk,bnk->bn", f, f) - radius * radius  # (B, N)
    b = np.einsum("brk,bnk->brn", directions, f)  # (B, r, N)
    disc = b * b - c[:, None, :]
    root = -b - np.sqrt(np.maximum(disc, 0.0))
    inside = c[:, None, :] <= 0.0
    ahead = (disc >= 0.0) & (root >= 0.0)
    return np.where(inside, 0.0, np.where(ahead, root, np.inf))


def cast_all_rays(
    positions: ArrayLike,
    headings: ArrayLike,
    depots: ArrayLike,
    active: ArrayLike,
    *,
    r: int,
    fov: float,
    d_max: float,
    radius: float,
    sources: ArrayLike | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Cast ``r`` rays from each source slot and return ``(d, e_hit)`` of shape ``(B, r)``.

    Only active slots are hit candidates and a source never hits itself. The
    nearest hit wins (ties go to the lowest slot); rays without a hit within
    ``d_max`` read ``(d_max, 0)``.
    """
    positions = np.asarray(positions, dtype=np.float64)
    depots = np.asarray(depots, dtype=np.float64)
    active = np.asarray(active, dtype=bool)
    headings = np.asarray(headings, dtype=np.float64)
    src = (
        np.arange(len(positions))
        if sources is None
        else np.atleast_1d(np.asarray(sources, dtype=np.intp))
    )

    angles = headings[src][:, None] + ray_offsets(r, fov)[None, :]
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    dist = _hit_distances(positions[src], directions, positions, radius)

    candidate = np.broadcast_to(active, (len(src), len(positions))).copy()
    candidate[np.arange(len(src)), src] = False
    dist = np.where(candidate[:, None, :], dist, np.inf)

    nearest = np.argmin(dist, axis=-1)  # (B, r)
    d = np.take_along_axis(dist, nearest[..., None], axis=-1)[..., 0]
    hit = d <= d_max
    return np.where(hit, d, d_max), np.where(hit, depots[nearest], 0.0)


def cast_rays(
    self_index: int,
    positions: ArrayLike,
    depots: ArrayLike,
    active: ArrayLike,
    heading: float,
    *,
    r: int,
    fov: float,
    d_max: float,
    radius: float,
) -> list[RayReading]:
    """Readings for a single boid, see `cast_all_rays`."""
    positions = np.asarray(positions, dtype=np.float64)
    headings = np.zeros(len(positions))
    headings[self_index] = heading
    d, e_hit = cast_all_rays(
        positions,
        headings,
        depots,
        active,
        r=r,
        fov=fov,
        d_max=d_max,
        radius=radius,
        sources=[self_index],
    )
    return [RayReading(float(dk), float(ek)) for dk, ek in zip(d[0], e_hit[0])]


def assemble_observation(
    d: ArrayLike, e_hit: ArrayLike, body: ArrayLike
) -> NDArray[np.float64]:
    """Interleave ray channels ``[d_1, e_1, ..., d_r, e_r]`` and append the body block.

    ``body`` is ``(..., 10)`` ordered as
    ``[v_x, v_y, omega, m_i, m_N, e_i, e_g, e_e, e_c, w_i]``.
    """
    d = np.asarray(d, dtype=np.float64)
    e_hit = np.asarray(e_hit, dtype=np.float64)
    body = np.asarray(body, dtype=np.float64)
    if d.shape != e_hit.shape:
        raise ValueError(f"ray channel shapes differ: {d.shape} vs {e_hit.shape}")
    if body.shape[-1] != BODY_FIELDS:
        raise ValueError(f"body block must have {BODY_FIELDS} entries, got {body.shape[-1]}")
    rays = np.stack([d, e_hit], axis=-1).reshape(*d.shape[:-1], 2 * d.shape[-1])
    return np.concatenate([rays, body], axis=-1)
