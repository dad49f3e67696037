"""Deterministic integer hashing and seeded shuffling primitives.

Pure 64-bit integer arithmetic only, so results are identical across
processes and platforms. Used by the offline embedder, the LLM mocks,
and benchmark sampling.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_GOLDEN = 0x9E3779B97F4A7C15


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def mix64(value: int, seed: int = 0) -> int:
    """Finalize ``value`` combined with ``seed`` through the splitmix64 mixer."""
    z = (value ^ ((seed & MASK64) * _GOLDEN)) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


class SplitMix64:
    """splitmix64 pseudo-random stream."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def below(self, bound: int) -> int:
        """Integer in [0, bound) via modulo reduction (reduction rule is part
        of the pinned algorithm, bias accepted)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound


def fisher_yates(items, rng: SplitMix64) -> list:
    """Shuffled copy of ``items``; classic descending-index Fisher-Yates."""
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
