"""Ground-truth prime generation, independent of all analytic machinery.

Everything here is deterministic (sieve of Eratosthenes plus trial division);
the rest of the package treats these results as the oracle that certified
recurrences must reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["SieveTable", "is_prime", "next_prime_after", "sieve_primes"]


@dataclass(frozen=True)
class SieveTable:
    """Primality bitmap for 0..limit (inclusive)."""

    limit: int
    bitmap: bytearray = field(repr=False)

    @classmethod
    def up_to(cls, limit: int) -> "SieveTable":
        if limit < 1:
            raise ValueError("sieve limit must be positive")
        flags = bytearray(b"\x01") * (limit + 1)
        flags[0:2] = b"\x00" * min(2, limit + 1)
        for p in range(2, math.isqrt(limit) + 1):
            if flags[p]:
                flags[p * p :: p] = bytearray(len(range(p * p, limit + 1, p)))
        return cls(limit=limit, bitmap=flags)

    def is_prime(self, k: int) -> bool:
        if not 0 <= k <= self.limit:
            raise ValueError(f"{k} outside sieve range 0..{self.limit}")
        return bool(self.bitmap[k])

    def primes(self) -> list[int]:
        return [k for k in range(2, self.limit + 1) if self.bitmap[k]]


def _upper_bound_for_nth_prime(n: int) -> int:
    # p_n < n (ln n + ln ln n) for n >= 6; small n handled by the floor of 16
    if n < 6:
        return 16
    x = float(n)
    return int(x * (math.log(x) + math.log(math.log(x)))) + 2


def sieve_primes(count: int) -> list[int]:
    """First ``count`` primes, strictly increasing."""
    if count < 1:
        raise ValueError("count must be at least 1")
    limit = _upper_bound_for_nth_prime(count)
    while True:
        table = SieveTable.up_to(limit)
        found = table.primes()
        if len(found) >= count:
            return found[:count]
        limit *= 2


def is_prime(k: int) -> bool:
    """Deterministic primality test by trial division (desk scale)."""
    if k < 2:
        return False
    if k < 4:
        return True
    if k % 2 == 0:
        return False
    for d in range(3, math.isqrt(k) + 1, 2):
        if k % d == 0:
            return False
    return True


def next_prime_after(k: int) -> int:
    """Smallest prime strictly greater than ``k``."""
    candidate = k + 1
    while not is_prime(candidate):
        candidate += 1
    return candidate
