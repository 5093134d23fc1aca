"""Deterministic seed splitting.

A root seed plus a path of keys names an independent random stream, so a
pipeline produces the same draws no matter which other streams were used
before it.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    if k < 0:
        raise ValueError(f"stream keys must be nonnegative, got {k}")
    return int(k)


def seed_sequence(seed: int | np.random.SeedSequence, *keys: int | str) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        base_key = tuple(seed.spawn_key)
        return np.random.SeedSequence(seed.entropy, spawn_key=base_key + tuple(_key(k) for k in keys))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))


def rng(seed: int | np.random.SeedSequence, *keys: int | str) -> np.random.Generator:
    """Generator for the stream ``(seed, *keys)``."""
    return np.random.default_rng(seed_sequence(seed, *keys))
