"""Random streams.

Every stream is a numpy ``Generator`` backed by PCG64, seeded through
``SeedSequence(master_seed, spawn_key=key)``. The key is a tuple of small
integers (row index, trial index, purpose tag, ...), so any single trial can be
regenerated without replaying the others, and results do not depend on the
order in which parallel trials finish.
"""
from __future__ import annotations

import numpy as np

GENERATOR = "numpy.random.PCG64 via SeedSequence(entropy=seed, spawn_key=key)"

# purpose tags keep deployment / schedule / mark streams of one trial independent
DEPLOY, SCHEDULE, MARKS, FAMILY, AUX = range(5)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be an unsigned integer")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
