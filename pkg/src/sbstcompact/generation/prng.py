"""splitmix64 pseudorandom generator."""

from __future__ import annotations

from typing import List, Sequence, TypeVar

T = TypeVar("T")

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 with the published constants; one 64-bit output per call."""

    def __init__(self, seed: int) -> None:
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % bound

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in ``[low, high]``."""
        if high < low:
            raise ValueError("empty range")
        return low + self.randbelow(high - low + 1)

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("cannot choose from an empty sequence")
        return items[self.randbelow(len(items))]

    def sample(self, items: Sequence[T], count: int) -> List[T]:
        """``count`` distinct items via a partial Fisher-Yates shuffle."""
        if count > len(items):
            raise ValueError("sample larger than population")
        pool = list(items)
        for index in range(count):
            swap = index + self.randbelow(len(pool) - index)
            pool[index], pool[swap] = pool[swap], pool[index]
        return pool[:count]


__all__ = ["SplitMix64"]
