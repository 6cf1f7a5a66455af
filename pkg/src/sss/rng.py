"""Deterministic, order-independent random streams.

Every stream is keyed by a master seed plus a tuple of labels, hashed into
the 128-bit key of a counter-based Philox generator. Two streams with
different labels are independent regardless of the order in which they are
created.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_key(seed: int, *labels: object) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(str(int(seed) & _MASK64).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int, *labels: object) -> np.random.Generator:
    key = stream_key(seed, *labels)
    return np.random.Generator(np.random.Philox(key=[key & _MASK64, key >> 64]))


def sub_seed(seed: int, *labels: object) -> int:
    """64-bit integer derived from ``seed`` and ``labels`` (for recording in results)."""
    return stream_key(seed, *labels) & _MASK64
