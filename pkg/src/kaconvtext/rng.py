"""Seeded random streams.

Every random draw in the package comes from a Philox (counter-based)
generator keyed by ``(seed, stream)``, so that initialization, dropout
masks and data shuffling never perturb one another.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

STREAMS = {
    "init": 0,
    "dropout": 1,
    "shuffle": 2,
    "embedding": 3,
    "split": 4,
}


def make_rng(seed: int, stream: str = "init") -> np.random.Generator:
    if stream not in STREAMS:
        raise InvalidArgument(f"unknown rng stream {stream!r}")
    seq = np.random.SeedSequence([int(seed), STREAMS[stream]])
    return np.random.Generator(np.random.Philox(seq))
