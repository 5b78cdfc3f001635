"""Path-count arithmetic: exact big integers or residues modulo a prime.

Internally the algorithms work on plain ints (reduced modulo p when a
modulus is active) for speed; CountValue is the typed wrapper used at API
boundaries so exact and modular results cannot be mixed by accident.
"""
from __future__ import annotations

from dataclasses import dataclass

from .rng import SplitMix64


@dataclass(frozen=True)
class CountValue:
    """A path multiplicity: exact when prime is None, else a residue mod prime."""

    value: int
    prime: int | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("count cannot be negative")
        if self.prime is not None and self.value >= self.prime:
            raise ValueError("residue must be reduced")

    def _check(self, other: "CountValue") -> None:
        if self.prime != other.prime:
            raise ValueError("mixed exact/modular count arithmetic")

    def __add__(self, other: "CountValue") -> "CountValue":
        self._check(other)
        s = self.value + other.value
        return CountValue(s % self.prime if self.prime else s, self.prime)

    def __mul__(self, other: "CountValue") -> "CountValue":
        self._check(other)
        s = self.value * other.value
        return CountValue(s % self.prime if self.prime else s, self.prime)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def __int__(self) -> int:
        return self.value


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_probable_prime(n: int, rounds: int = 64, seed: int = 0x5EED) -> bool:
    """Miller-Rabin with deterministic seeded witnesses."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    rng = SplitMix64(seed ^ n)
    for _ in range(rounds):
        a = 2 + rng.next_u64() % (n - 3)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits: int, seed: int) -> int:
    """Deterministic random prime with exactly `bits` bits."""
    if bits < 3:
        raise ValueError("need at least 3 bits")
    rng = SplitMix64(seed)
    while True:
        cand = rng.next_u64()
        if bits > 64:
            extra = bits - 64
            for _ in range((extra + 63) // 64):
                cand = (cand << 64) | rng.next_u64()
        cand |= 1
        cand |= 1 << (bits - 1)
        cand &= (1 << bits) - 1
        if is_probable_prime(cand):
            return cand


def prime_bits_for(k: int, n: int, factor: int = 4) -> int:
    """Bit length ceil(factor*k*log2(n)) used when picking a query-time prime."""
    import math

    if n < 2:
        n = 2
    return max(8, math.ceil(factor * max(1, k) * math.log2(n)))
