"""Deterministic, splittable random streams built on the SplitMix64 mixer.

The generator is counter-based: output k of a stream with seed s is
``mix64(s + (k + 1) * GOLDEN)`` where GOLDEN is the 64-bit golden-ratio
increment and mix64 is the SplitMix64 finalizer (two xor-shift/multiply
rounds plus a final shift).  Counter indexing makes batch generation a
single vectorized pass, and output bits are identical regardless of how
draws are batched.  Parallel replicates get independent streams via
``substream_seed``.

Samplers avoid platform special functions on the sampling path so a
given (seed, call sequence) is reproducible bit for bit: normals come
from Box-Muller with both outputs consumed, Cauchy from the quantile
transform, and Student t from a normal over the root of a chi-square
assembled from squared normals.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_TWO53 = float(1 << 53)


def substream_seed(base_seed: int, index: int) -> int:
    """Seed of the index-th parallel stream: base XOR (index * GOLDEN)."""
    with np.errstate(over="ignore"):
        return int(_U64(base_seed) ^ (_U64(index) * GOLDEN))


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


class Stream:
    """One deterministic random stream; every method is a vectorized batch."""

    def __init__(self, seed: int):
        self.seed = _U64(seed)
        self.counter = _U64(0)

    def u64(self, k: int) -> np.ndarray:
        """Next k raw 64-bit words."""
        with np.errstate(over="ignore"):
            idx = self.counter + np.arange(1, k + 1, dtype=np.uint64)
            self.counter += _U64(k)
            return _mix(self.seed + idx * GOLDEN)

    def uniform_open_closed(self, k: int) -> np.ndarray:
        """Uniform draws in (0, 1], suitable for design coordinates."""
        return ((self.u64(k) >> _U64(11)).astype(float) + 1.0) / _TWO53

    def uniform_open(self, k: int) -> np.ndarray:
        """Uniform draws in the open interval (0, 1)."""
        return ((self.u64(k) >> _U64(11)).astype(float) + 0.5) / _TWO53

    def normal(self, k: int) -> np.ndarray:
        """Standard normals via Box-Muller, consuming both outputs per pair."""
        pairs = (k + 1) // 2
        u1 = self.uniform_open_closed(pairs)
        u2 = self.uniform_open(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:k]

    def cauchy(self, k: int) -> np.ndarray:
        """Standard Cauchy via tan(pi * (U - 1/2))."""
        return np.tan(np.pi * (self.uniform_open(k) - 0.5))

    def student_t(self, k: int, dof: int) -> np.ndarray:
        """Student t(dof) as Z / sqrt(chi2_dof / dof), chi2 from squared normals."""
        if dof < 1:
            raise ValueError(f"dof must be >= 1, got {dof}")
        draws = self.normal((dof + 1) * k)
        z = draws[:k]
        chi2 = np.sum(draws[k:].reshape(dof, k) ** 2, axis=0)
        return z * np.sqrt(dof / chi2)
