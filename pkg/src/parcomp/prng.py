"""Deterministic 64-bit PRNG used for every randomized decision in parcomp.

The generator is SplitMix64 (Steele, Lea & Flood's mixing function over a
64-bit Weyl sequence). It is counter-based: the i-th output of a stream
seeded with ``s`` is ``mix64(s + (i + 1) * GAMMA) mod 2**64``, so any
implementation in any language can reproduce a stream without stepping
through state.

Reference vectors, first four outputs per seed:

    seed 0  -> 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
               0x06C45D188009454F, 0xF88BB8A8724C81EC
    seed 1  -> 0x910A2DEC89025CC1, 0xBEEB8DA1658EEC67,
               0xF893A2EEFB32555E, 0x71C18690EE42C90B
    seed 42 -> 0xBDD732262FEB6E95, 0x28EFE333B266F103,
               0x47526757130F9F52, 0x581CE1FF0E4AE394

These vectors are frozen in the test suite; see tests/test_prng.py.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """Finalizing mix of SplitMix64: avalanche a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_at(seed: int, index: int) -> int:
    """Return output ``index`` (0-based) of the stream seeded with ``seed``."""
    return mix64((seed + (index + 1) * GAMMA) & MASK64)


class SplitMix64:
    """Sequential view of the counter-based stream."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GAMMA) & MASK64
        return mix64(self._state)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection on the top multiple."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (MASK64 + 1) - ((MASK64 + 1) % bound)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % bound

    def next_float(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))
