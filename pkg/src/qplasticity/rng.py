"""Named, splittable random streams.

Every random draw in the package comes from :func:`stream`, which builds a
``numpy.random.Generator`` over the counter-based Philox-4x64 bit generator.
The key is derived with ``numpy.random.SeedSequence(entropy=seed,
spawn_key=keys)``, where string keys are mapped to integers with CRC-32 of
their UTF-8 bytes. A stream is therefore a pure function of ``(seed, *keys)``:
e.g. ``stream(7, "shuffle", 12)`` is the minibatch-shuffling stream of task 12.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part)
    raise TypeError(f"stream keys must be str or non-negative int, got {part!r}")


def stream(seed: int, *keys) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
