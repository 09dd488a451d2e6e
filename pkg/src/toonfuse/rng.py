"""Deterministic counter-based PRNG and hashing used everywhere randomness or
digests are needed.

The generator is SplitMix64 run in counter mode: draw number k (1-based) of a
stream with seed s is ``mix64((s + k * GOLDEN) mod 2**64)``.  Because each
output depends only on (seed, counter) the streams are trivially reproducible,
order-independent across tensors, and cheap to vectorize.  Uniform doubles are
``((bits >> 11) + 1) * 2**-53`` (half-open in (0, 1]), and normal draws come
from Box-Muller pairs (cos variate first, then sin), consumed in interleaved
order.  These conventions are frozen by reference-vector tests.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """Scalar SplitMix64 finalizer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK
    return h


class CounterRng:
    """Stateful view over a SplitMix64 counter stream.

    Consecutive calls continue the stream; ``derive`` produces an independent
    child stream keyed by name, so parameter tensors can be initialized in any
    order without affecting each other.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK
        self.counter = int(counter)

    def derive(self, name: str) -> "CounterRng":
        return CounterRng(mix64(self.seed ^ fnv1a64(name.encode("utf-8"))))

    def uint64(self, n: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = (np.uint64(self.seed) + k * np.uint64(GOLDEN)).astype(np.uint64)
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)).astype(np.uint64)
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)).astype(np.uint64)
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """n doubles in (0, 1]."""
        bits = self.uint64(n)
        return ((bits >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """n standard normal draws via Box-Muller."""
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def normal_array(self, shape: tuple[int, ...], scale: float = 1.0) -> np.ndarray:
        flat = self.normal(int(np.prod(shape)) if shape else 1)
        arr = flat.reshape(shape) * scale
        return arr
