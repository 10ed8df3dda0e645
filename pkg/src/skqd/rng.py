"""Reproducible random streams.

Every stochastic routine draws from a counter-based Philox generator keyed
by (seed, subkey...). Substreams are independent of execution order and
worker count, so sweeps give identical results serial or parallel.
"""

from __future__ import annotations

import numpy as np


def substream(seed, *key) -> np.random.Generator:
    """Generator for the substream identified by (seed, *key)."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
        if key:
            ss = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(key))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
