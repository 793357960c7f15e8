"""Deterministic derivation of child seeds and generators.

Every stochastic component in the package draws from a generator derived
from (base seed, context keys). Derivation is order-sensitive and stable
across platforms and numpy versions, which is what makes serial and
parallel execution produce identical results.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = 0xFFFF_FFFF_FFFF_FFFF


def _as_entropy(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & _U64
    if isinstance(key, str):
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"seed key must be int or str, got {type(key).__name__}")


def child_seed(base_seed: int, *keys) -> int:
    """Derive a 64-bit seed from a base seed and a sequence of context keys."""
    entropy = [_as_entropy(base_seed)] + [_as_entropy(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def child_rng(base_seed: int, *keys) -> np.random.Generator:
    """Generator seeded from ``child_seed(base_seed, *keys)``."""
    entropy = [_as_entropy(base_seed)] + [_as_entropy(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
