"""Stable seed derivation.

Every random stream in trialcv is keyed by a tuple of parts hashed with
BLAKE2b, so streams are independent of execution order and of each other.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: int | str) -> int:
    """Return a 64-bit seed that is a pure function of ``parts``."""
    h = hashlib.blake2b(digest_size=8, person=b"trialcv-seed")
    for part in parts:
        if isinstance(part, int):
            h.update(b"i")
            h.update((part & _MASK64).to_bytes(8, "little"))
        else:
            h.update(b"s")
            encoded = part.encode("utf-8")
            h.update(len(encoded).to_bytes(4, "little"))
            h.update(encoded)
    return int.from_bytes(h.digest(), "little")


def rng_for(*parts: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
