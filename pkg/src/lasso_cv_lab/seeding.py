"""Deterministic seed derivation.

Child seeds are the first 8 bytes (little endian) of a BLAKE2b digest of the
parent seed and a tuple of labels, joined with ``/``.  Random streams are
numpy ``PCG64`` generators, which produce identical output on every platform
for a given 64-bit seed.
"""
import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def hash64(*parts) -> int:
    key = "/".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_seed(seed: int, *labels) -> int:
    """Child seed for ``labels``; depends only on ``seed`` and the labels."""
    return hash64(int(seed) & MASK64, *labels)


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
