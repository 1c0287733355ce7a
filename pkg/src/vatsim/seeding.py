"""Seed fan-out for reproducible ensembles.

Every bath in an experiment gets its own ``numpy.random.SeedSequence`` whose
entropy is the master seed and whose spawn key is built from
``(experiment_tag, trial_index, channel_tag, observer_index)``.  String tags
are mapped to integers with CRC-32 so the assignment is stable across
processes, platforms and worker counts.  SeedSequence then hashes the pair
into the PCG64 state, so nearby keys give unrelated streams.
"""

from __future__ import annotations

import zlib

import numpy as np

CHANNELS = {"L": 0, "R": 1, "-": 2}


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def derive_seed(
    master_seed: int,
    experiment: str,
    trial: int = 0,
    channel: str = "-",
    observer: int = 0,
) -> np.random.SeedSequence:
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    key = (tag_id(experiment), int(trial), CHANNELS[channel], int(observer))
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)


def rng_for(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
