"""Deterministic random streams.

Every stochastic choice in the package (parameter init, scene synthesis,
batch shuffling, augmentation) draws from a named substream of a single
64-bit seed.  A substream is an independent xoshiro256** generator whose
state is seeded through splitmix64 from (seed, stream name), so adding or
reordering draws in one subsystem never perturbs another.

For throughput the generator runs a fixed number of parallel xoshiro lanes
and interleaves their outputs block-major; the sequence for a given
(seed, name) is identical on every platform because all arithmetic is
exact uint64.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_LANES = 8


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash; also used for config digests."""
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Stream:
    """One named substream: vectorized xoshiro256** over parallel lanes."""

    def __init__(self, seed: int, name: str):
        if not 0 <= seed <= _MASK:
            raise ValueError(f"seed must fit in u64, got {seed}")
        self.name = name
        state = seed ^ fnv1a64(name.encode("utf-8"))
        words = []
        for _ in range(4 * _LANES):
            state, out = splitmix64(state)
            words.append(out)
        # s[word, lane]
        self._s = np.array(words, dtype=np.uint64).reshape(4, _LANES)
        self._buf = np.empty(0, dtype=np.uint64)
        self._pos = 0

    def _block(self) -> np.ndarray:
        s = self._s
        result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
        t = s[1] << np.uint64(17)
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit values."""
        if n < 0:
            raise ValueError("n must be >= 0")
        out = np.empty(n, dtype=np.uint64)
        filled = 0
        avail = self._buf[self._pos:]
        take = min(n, avail.size)
        out[:take] = avail[:take]
        self._pos += take
        filled += take
        while filled < n:
            self._buf = self._block()
            self._pos = 0
            take = min(n - filled, _LANES)
            out[filled:filled + take] = self._buf[:take]
            self._pos = take
            filled += take
        return out

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """n doubles in [low, high)."""
        u = (self.u64(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
        return low + u * (high - low)

    def randint(self, n: int, low: int, high: int) -> np.ndarray:
        """n integers in [low, high); modulo draw (bias negligible for our ranges)."""
        if high <= low:
            raise ValueError("empty randint range")
        span = np.uint64(high - low)
        return (low + (self.u64(n) % span).astype(np.int64)).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) via stable argsort of uniforms."""
        return np.argsort(self.uniform(n), kind="stable")


def substream(seed: int, *parts: object) -> Stream:
    """Stream named by '/'-joined parts, e.g. substream(seed, 'scene', 3, 'sites')."""
    return Stream(seed, "/".join(str(p) for p in parts))
