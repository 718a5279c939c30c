"""Seeded random-number streams.

Every stochastic component in the package draws from numpy's PCG64 generator
seeded through ``numpy.random.SeedSequence``, which has a published, stable
algorithm, so results are identical across platforms and runs. Independent
streams (per subject, per tree, per grid cell) are derived from the master
seed plus integer stream keys, never from global state, so parallel
schedules cannot change results.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream_keys: int) -> np.random.Generator:
    """Return a PCG64 generator for the (seed, *stream_keys) stream."""
    entropy = (int(seed),) + tuple(int(k) for k in stream_keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
