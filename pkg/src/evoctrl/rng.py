"""Counter-based random streams shared by both interpreter backends.

Episode-internal randomness (uniform-draw instructions, actuator noise) must
produce the same sequence whether an episode runs in the numba kernel or the
pure-Python interpreter, so both sides implement the same splitmix64 stream.
Host-side sampling (program generation, mutation, search) uses numpy
Generators and does not need cross-backend identity.
"""

from __future__ import annotations

import math

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

TWO_PI = 2.0 * math.pi
U53 = 2.0 ** -53


def scramble(z: int) -> int:
    """splitmix64 finalizer; full-avalanche mix of a 64-bit value."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Derive a child seed from a master seed and a counter path.

    Deterministic and collision-resistant enough for experiment bookkeeping;
    used to give each episode (and each kernel stream) its own seed.
    """
    h = seed & _MASK
    for k in path:
        h = scramble((h + _GOLDEN * (k + 1)) & _MASK)
    return h


class SplitMix64:
    """Minimal splitmix64 stream; mirrored verbatim inside the numba kernels."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return scramble(self.state)

    def uniform01(self) -> float:
        # 53-bit mantissa in [0, 1)
        return (self.next_u64() >> 11) * U53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform01()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        return lo + self.next_u64() % (hi - lo + 1)

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        # Box-Muller, cosine branch only (one draw per call keeps the
        # stream alignment identical across backends)
        u1 = ((self.next_u64() >> 11) + 1) * U53  # (0, 1]
        u2 = (self.next_u64() >> 11) * U53
        return mean + std * math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)
