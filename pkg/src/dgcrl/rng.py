"""Seeded xorshift64* generator with named substreams.

Each substream owns a private 64-bit state derived from the master seed and the
substream name through splitmix64, so draws on one stream never shift another.

Output mapping:
  * uniform doubles use the top 53 bits of the xorshift64* output;
  * normals use Box-Muller on pairs of uniforms (both branches consumed);
  * bounded integers use floor(u * high).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_MASK = (1 << 64) - 1
_MULT = np.uint64(0x2545F4914F6CDD1D)
_TWO53 = 1.0 / 9007199254740992.0

STREAMS = ("task-gen", "init", "action-noise", "policy-noise", "replay", "bootstrap")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _fnv1a(name: str) -> int:
    h = 0xCBF29CE484222325
    for byte in name.encode():
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


@njit(cache=True)
def _next(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * _MULT


@njit(cache=True)
def _fill_uniform(state, out):
    for i in range(out.size):
        out[i] = (_next(state) >> np.uint64(11)) * _TWO53


@njit(cache=True)
def _fill_normal(state, out):
    n = out.size
    i = 0
    while i < n:
        u1 = 1.0 - (_next(state) >> np.uint64(11)) * _TWO53
        u2 = (_next(state) >> np.uint64(11)) * _TWO53
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(2.0 * math.pi * u2)
        if i + 1 < n:
            out[i + 1] = r * math.sin(2.0 * math.pi * u2)
        i += 2


@njit(cache=True)
def _fill_int(state, high, out):
    for i in range(out.size):
        out[i] = np.int64(((_next(state) >> np.uint64(11)) * _TWO53) * high)


class Stream:
    """One independent xorshift64* sequence."""

    def __init__(self, seed: int):
        s = splitmix64(seed & _MASK)
        self._state = np.array([s if s else 0x9E3779B97F4A7C15], dtype=np.uint64)

    def uniform(self, low=0.0, high=1.0, size=None):
        out = np.empty(1 if size is None else size, dtype=np.float64)
        _fill_uniform(self._state, out.reshape(-1))
        out = low + (high - low) * out
        return float(out[0]) if size is None else out

    def normal(self, std=1.0, size=None):
        out = np.empty(1 if size is None else size, dtype=np.float64)
        _fill_normal(self._state, out.reshape(-1))
        out *= std
        return float(out[0]) if size is None else out

    def integers(self, high: int, size=None):
        if high < 1:
            raise ValueError(f"high must be >= 1, got {high}")
        out = np.empty(1 if size is None else size, dtype=np.int64)
        _fill_int(self._state, high, out.reshape(-1))
        return int(out[0]) if size is None else out

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), returned in ascending order."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} of {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.integers(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return sorted(pool[:k])

    def getstate(self) -> int:
        return int(self._state[0])


class Rng:
    """Master seed plus lazily created named substreams."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, Stream] = {}

    def stream(self, name: str) -> Stream:
        if name not in self._streams:
            self._streams[name] = Stream(splitmix64(self.seed & _MASK) ^ _fnv1a(name))
        return self._streams[name]

    def child(self, tag: int) -> "Rng":
        """Derived generator for a sub-run (e.g. one bootstrap agent)."""
        return Rng(splitmix64((self.seed * 0x9E3779B97F4A7C15 + tag + 1) & _MASK))
