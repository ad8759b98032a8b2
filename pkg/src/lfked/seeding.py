"""Named substreams derived from a single run seed.

Every stochastic component (data generation, parameter init, shuffling,
dropout, OOV vectors) draws from its own substream, so a component can be
reproduced in isolation from the run seed alone.
"""

from __future__ import annotations

import zlib

import numpy as np


def _as_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"substream parts must be int or str, got {type(part).__name__}")


def rng_for(seed: int, *parts) -> np.random.Generator:
    """Generator for the substream named by `parts` under `seed`.

    Same (seed, parts) always gives the same stream; different names give
    independent streams.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_as_entropy(p) for p in parts]
    return np.random.default_rng(np.random.SeedSequence(entropy))
