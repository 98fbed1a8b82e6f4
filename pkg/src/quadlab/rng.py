"""Deterministic RNG streams.

Every stochastic entry point takes an explicit seed; replicas use disjoint
stream ids spawned from the same root SeedSequence, so results are
reproducible and independent of scheduling.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Generator for (seed, stream_id); same pair always yields same draws."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream_id,))
    return np.random.Generator(np.random.PCG64(ss))


def child_seeds(seed: int, n: int, stream_id: int = 0) -> np.ndarray:
    """n uint64 seeds derived from (seed, stream_id), for numba kernels."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream_id,))
    return ss.generate_state(n, dtype=np.uint64)
