"""Counter-based random streams with exact, serializable positions.

Every draw is a pure function of (seed, position), so a stream can be
checkpointed as two integers and resumed bit-exactly on any platform.
numpy's generators do not expose their consumption counter, which is why
this module rolls its own splitmix64-style stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_M64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_TWO53 = float(1 << 53)


def _finalize(z: np.ndarray) -> np.ndarray:
    # splitmix64 output function; wraps mod 2^64 on uint64 arrays
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _pymix(z: int) -> int:
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


def mix64(*parts: int) -> int:
    """Hash-combine integers into one 64-bit value (order-sensitive)."""
    acc = 0
    for p in parts:
        acc = _pymix(((acc ^ (p & _M64)) + 0x9E3779B97F4A7C15) & _M64)
    return acc


def fnv1a64(text: str) -> int:
    """FNV-1a of the UTF-8 bytes; used to derive per-name substreams."""
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass
class RngState:
    """A named position in a deterministic 64-bit stream.

    Identical (seed, position) pairs yield identical draw sequences; the
    position advances by exactly one per 64-bit value consumed.
    """

    seed: int
    position: int = 0

    def _raw(self, n: int) -> np.ndarray:
        ctr = np.arange(self.position, self.position + n, dtype=np.uint64)
        self.position += n
        state = (np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF) + (ctr + np.uint64(1)) * _GOLDEN)
        return _finalize(state)

    def uniform(self, shape=()) -> np.ndarray:
        """float64 draws in [0, 1)."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) / _TWO53
        return u.reshape(shape) if shape else u[0]

    def normal(self, shape=()) -> np.ndarray:
        """Standard normal draws via Box-Muller (two uniforms per pair)."""
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        m = (n + 1) // 2
        raw = self._raw(2 * m)
        # (0,1] for the log term so log(0) cannot occur
        u1 = ((raw[:m] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53
        u2 = (raw[m:] >> np.uint64(11)).astype(np.float64) / _TWO53
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])[:n]
        return z.reshape(shape) if shape else z[0]

    def integers(self, low: int, high: int, shape=()) -> np.ndarray:
        """Integer draws in [low, high); modulo bias is negligible for desk-scale ranges."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        v = (self._raw(n) % np.uint64(high - low)).astype(np.int64) + low
        return v.reshape(shape) if shape else int(v[0])

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) by sorting 64-bit keys."""
        keys = self._raw(n)
        return np.argsort(keys, kind="stable")

    def split(self, label: str) -> "RngState":
        """Derive an independent stream keyed by a label; does not advance self."""
        return RngState(seed=mix64(self.seed, fnv1a64(label)))

    def state(self) -> tuple[int, int]:
        return (self.seed, self.position)

    @staticmethod
    def from_state(state) -> "RngState":
        seed, position = state
        return RngState(seed=int(seed), position=int(position))
