"""Counter-based splitmix64 random streams.

All randomness in the package flows through :class:`SeededRng` so that a run
is pinned by (seed, algorithm) alone, independent of platform and library
version, and so that other ecosystems can regenerate the exact same draw
sequence from the written-down constants below (the synthetic model matrices
in :mod:`latentprobe.synthetic` rely on this).

The stream is the classic splitmix64 sequence: word ``i`` (0-based) is
``mix64(seed + (i + 1) * GAMMA) mod 2**64`` and a draw in [0, 1) is the top
53 bits of the word times 2**-53. Substreams are derived from the master
seed with a separate salted mix so they never alias a shifted parent stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

ALGORITHM = "splitmix64"

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL1 = 0xBF58476D1CE4E5B9
_MIX_MUL2 = 0x94D049BB133111EB
_SPLIT_SALT = 0xBB67AE8584CAA73B
_SPLIT_MUL = 0xC2B2AE3D27D4EB4F

_U53_SCALE = 2.0 ** -53


def mix64(x: int) -> int:
    """Splitmix64 finalizer (Stafford mix 13) on a 64-bit word."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX_MUL1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX_MUL2) & MASK64
    return x ^ (x >> 31)


def stream_words(seed: int, start: int, count: int) -> np.ndarray:
    """Words ``start .. start+count-1`` of the splitmix64 stream, vectorized."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + idx * np.uint64(GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_MUL2)
    return z ^ (z >> np.uint64(31))


def words_to_unit(words: np.ndarray) -> np.ndarray:
    """Map 64-bit words to float64 in [0, 1) using the top 53 bits."""
    return (words >> np.uint64(11)).astype(np.float64) * _U53_SCALE


@dataclass
class SeededRng:
    """Deterministic uniform source with an explicit draw counter.

    Equal (seed, counter) always yields the same draws; every method
    documents how many words it consumes so streams can be reasoned about.
    """

    seed: int
    counter: int = 0
    algorithm: str = field(default=ALGORITHM)

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.algorithm != ALGORITHM:
            raise ConfigurationError(f"unknown rng algorithm {self.algorithm!r}")

    def _take(self, count: int) -> np.ndarray:
        words = stream_words(self.seed, self.counter, count)
        self.counter += count
        return words

    def unit(self, count: int) -> np.ndarray:
        """``count`` uniform draws in [0, 1); consumes ``count`` words."""
        return words_to_unit(self._take(count))

    def uniform(self, low: float, high: float, count: int) -> np.ndarray:
        """``count`` uniform draws in [low, high)."""
        return low + self.unit(count) * (high - low)

    def uniform_matrix(self, lower: np.ndarray, upper: np.ndarray, n: int) -> np.ndarray:
        """(n, D) matrix with row-major draws, column j uniform in [lower[j], upper[j])."""
        d = lower.shape[0]
        u = self.unit(n * d).reshape(n, d)
        return lower[None, :] + u * (upper - lower)[None, :]

    def split(self, stream_id: int) -> "SeededRng":
        """Independent substream; derivation is a salted mix of (seed, id)."""
        child = mix64(((self.seed ^ _SPLIT_SALT) + ((stream_id + 1) * _SPLIT_MUL)) & MASK64)
        return SeededRng(seed=child)
