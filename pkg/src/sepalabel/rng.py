"""Deterministic 64-bit RNG used by all generators and samplers.

SplitMix64 is small enough to re-implement exactly, which keeps every
generated fixture bit-reproducible across platforms and releases.
"""
from __future__ import annotations

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 stream seeded with a single 64-bit value."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]. Uses a plain modulo reduction;
        the bias is negligible for the ranges used here and keeping the
        reduction trivial makes the fixtures easy to reproduce elsewhere."""
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def choice_index(self, k: int) -> int:
        return self.next_u64() % k
