"""Counter-based random-number streams for reproducible parallel ensembles.

Each trajectory gets its own Philox stream keyed by ``(master_seed, index)``.
Philox is counter-based, so stream ``i`` is available in O(1) without
generating streams ``< i``, and the draws for a given ``(seed, index)`` are
bit-for-bit identical regardless of worker scheduling or chunk layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "stream_generator", "stream_generators"]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Address of one reproducible noise stream."""

    master_seed: int
    index: int

    def generator(self) -> np.random.Generator:
        return stream_generator(self.master_seed, self.index)


def stream_generator(master_seed: int, index: int) -> np.random.Generator:
    """Generator for stream ``index`` under ``master_seed``."""
    key = np.array([master_seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def stream_generators(master_seed: int, start: int, count: int) -> list[np.random.Generator]:
    """Generators for the contiguous stream block [start, start + count)."""
    return [stream_generator(master_seed, start + i) for i in range(count)]
