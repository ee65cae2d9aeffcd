"""Named counter-based random streams.

Every random draw in a rollout comes from a generator keyed by
``(seed, stream name, *counters)``. Draws therefore never depend on evaluation
order or worker count.
"""

from __future__ import annotations

import zlib

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode())


def stream(seed: int, name: str, *counters: int) -> np.random.Generator:
    """Return a Philox generator for one ``(seed, name, counters)`` cell."""
    seq = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(_name_key(name), *(int(c) for c in counters))
    )
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: int, name: str, *counters: int) -> int:
    """Derive a child integer seed, e.g. a scenario seed for a generation."""
    seq = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(_name_key(name), *(int(c) for c in counters))
    )
    return int(seq.generate_state(1, dtype=np.uint32)[0])
