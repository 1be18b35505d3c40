"""Deterministic random-stream derivation.

Every randomized stage draws from a generator derived from (seed, stream key)
so that stages and per-record perturbations can run in any order, or in
parallel, and still reproduce bit-identically.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def _key_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_rng(seed: int, *key) -> np.random.Generator:
    """Generator for stream `key` under `seed`; stable across platforms."""
    words = [int(seed) & _MASK64] + [_key_word(p) for p in key]
    return np.random.default_rng(np.random.SeedSequence(words))
