"""
Seeded random streams.

All stochastic code takes a ``numpy.random.Generator``. Stages that must not
depend on execution order get their own generator derived from the run seed
and a stage key, so running sweep cells in parallel or in a different order
yields the same numbers.
"""

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np

ALGORITHM = "PCG64"

Key = Union[int, str, float]


def _key_to_int(key: Key) -> int:
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
        return int(key) & 0xFFFFFFFF
    digest = hashlib.sha256(repr(key).encode()).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class RngHandle:
    """Seed plus algorithm identifier; identical seeds give identical streams."""
    seed: int
    algorithm: str = ALGORITHM

    def generator(self) -> np.random.Generator:
        """Create a fresh generator positioned at the start of the stream."""
        if self.algorithm != ALGORITHM:
            raise ValueError(f"Unsupported bit generator: {self.algorithm}")
        return np.random.Generator(np.random.PCG64(self.seed))

    def derive(self, *keys: Key) -> "RngHandle":
        """Handle for an independent sub-stream named by ``keys``."""
        return RngHandle(derive_seed(self.seed, *keys), self.algorithm)


def derive_seed(seed: int, *keys: Key) -> int:
    """Derive a 64-bit child seed from a parent seed and a path of keys."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return int(seq.generate_state(2, dtype=np.uint32).view(np.uint64)[0])


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Generator for ``seed`` (optionally for the sub-stream ``keys``)."""
    handle = RngHandle(int(seed))
    if keys:
        handle = handle.derive(*keys)
    return handle.generator()
