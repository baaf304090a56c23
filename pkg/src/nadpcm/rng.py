"""Portable deterministic random numbers.

Encoder and decoder retrain predictors independently and must draw
bit-identical initial weights, so randomness comes from SplitMix64 (a
fixed 64-bit mixing generator) rather than any platform or library
default whose stream could change between versions.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Combine integers (stream seed, frame index, family, member, ...)
    into one 64-bit sub-stream seed.

    Order-sensitive and deterministic: the same parts always yield the
    same seed.
    """
    acc = 0
    for p in parts:
        acc = _finalize((acc + _GOLDEN + (int(p) & _MASK64)) & _MASK64)
    return acc


class SplitMix64:
    """SplitMix64 sequence generator with float helpers."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _finalize(self._state)

    def next_float(self) -> float:
        # Top 53 bits give a uniform double in [0, 1).
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, low: float, high: float, size=None) -> np.ndarray | float:
        """Uniform draw(s) in [low, high). Scalar when size is None."""
        if size is None:
            return low + (high - low) * self.next_float()
        n = int(np.prod(size))
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            out[i] = low + (high - low) * self.next_float()
        return out.reshape(size)
