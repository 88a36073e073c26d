"""Seeded pseudo-random function used by every randomized operation.

Sampling and splitting decisions are pure functions of (seed, row id,
stream), never of partition layout or thread scheduling, so results are
bit-identical across machines, partition counts, and worker counts. The
mixing function is the splitmix64 finalizer applied twice; the top 53
bits of the result map to a uniform value in [0, 1).

Each kind of randomized operation draws from its own stream constant so
that, for example, down-sampling survivors are not correlated with the
train/test/validation assignment made afterwards under the same seed.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream constants; arbitrary fixed odd values, one per operation family.
STREAM_FRACTION = 0xA3EC_5F1D_9B24_C771
STREAM_SPLIT = 0x1BDE_64C3_0F5A_88D9
STREAM_HOLDOUT = 0x7C09_E2B5_316F_4A4D

_UNIT = 2.0**-53


def mix64(z: int) -> int:
    """splitmix64 finalizer step on a 64-bit integer."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def unit_hash(seed: int, row_id: int, stream: int = 0) -> float:
    """Deterministic uniform value in [0, 1) keyed by (seed, row_id, stream)."""
    h = mix64(mix64(mix64(seed & _MASK64) ^ (stream & _MASK64)) ^ (row_id & _MASK64))
    return (h >> 11) * _UNIT


def unit_hash_array(seed: int, row_ids: np.ndarray, stream: int = 0) -> np.ndarray:
    """Vectorized `unit_hash` over an array of row ids.

    Bit-for-bit identical to the scalar version; used on large tables.
    """
    base = mix64(mix64(seed & _MASK64) ^ (stream & _MASK64))
    z = row_ids.astype(np.uint64, copy=True)
    z ^= np.uint64(base)
    with np.errstate(over="ignore"):
        z += np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * _UNIT
