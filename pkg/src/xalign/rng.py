"""Deterministic random substreams.

Every generator is a Philox counter-based bit generator seeded from a
``SeedSequence`` whose entropy is the run seed and whose spawn key is a
tuple naming the consumer, e.g. ``("rate-gap", point, chunk)``.  String
parts are mapped to integers with CRC-32, so keys are stable across
processes and Python versions (unlike ``hash``).

Work is split into fixed-size chunks, each with its own substream, so the
numbers a chunk sees never depend on how many workers process the chunks.
"""

from __future__ import annotations

import zlib
from typing import Union

import numpy as np

KeyPart = Union[int, str]

SEED_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an int, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def key_int(part: KeyPart) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (bool,)) or int(part) < 0:
        raise ValueError(f"key parts must be non-negative ints or strings, got {part!r}")
    return int(part)


def substream(seed: int, *key: KeyPart) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(key_int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(total: int, chunk: int) -> list[int]:
    """Split ``total`` items into chunks of ``chunk`` (the last may be short)."""
    if total < 0 or chunk <= 0:
        raise ValueError("need total >= 0 and chunk > 0")
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes
