"""Seeded random streams.

Every stream is a Philox counter-based generator keyed by a numpy
``SeedSequence``.  The splitting rule is fixed: the generator for
``(master_seed, trial, stream)`` is ``Philox(SeedSequence(master_seed,
spawn_key=(trial, stream)))``.  A plain ``seed`` with no trial/stream uses an
empty spawn key.
"""
from __future__ import annotations

import numpy as np

GENERATOR_NAME = "numpy.random.Philox"
SPLITTING_RULE = "Philox(SeedSequence(master_seed, spawn_key=(trial, stream)))"

# stream indices used by the experiment harness
STREAM_MATRIX = 0
STREAM_INIT = 1
STREAM_SIDE = 2
STREAM_SIGNAL = 3
STREAM_SE = 4


def make_rng(seed: int, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def trial_rng(master_seed: int, trial: int, stream: int) -> np.random.Generator:
    return make_rng(master_seed, trial, stream)


def derive_seed(master_seed: int, *key: int) -> int:
    """A 63-bit integer seed derived from ``(master_seed, *key)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0]) >> 1


def as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(int(seed_or_rng))
