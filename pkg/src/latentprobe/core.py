"""Latent vectors, sampling boxes, and the box arithmetic driving the search.

A latent vector is a 1-D float64 array of backend-declared length D. Values
may lie outside [-1, 1]; nothing in this package ever clips a latent (the
generator tolerates out-of-range magnitudes, so clipping would only hide
information). Boxes are per-coordinate closed intervals from which candidate
latents are drawn uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError
from .rng import SeededRng

DEFAULT_LATENT_DIM = 200


def as_latent(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a latent as a float64 1-D array.

    Raises DimensionError on wrong length, ConfigurationError on NaN/Inf.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"latent must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"latent has length {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError("latent contains non-finite values")
    return v


def as_latent_batch(values, dim: int | None = None) -> np.ndarray:
    """Validate a batch of latents as an (n, D) float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if v.ndim != 2:
        raise DimensionError(f"latent batch must be two-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[1] != dim:
        raise DimensionError(f"latents have length {v.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError("latent batch contains non-finite values")
    return v


@dataclass(frozen=True)
class SamplingBox:
    """Per-coordinate [lower, upper] interval; lower[i] <= upper[i] everywhere."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_latent(self.lower)
        hi = as_latent(self.upper)
        if lo.shape != hi.shape:
            raise ConfigurationError(
                f"box bounds have mismatched lengths {lo.shape[0]} and {hi.shape[0]}"
            )
        if np.any(lo > hi):
            bad = int(np.argmax(lo > hi))
            raise ConfigurationError(
                f"box lower bound exceeds upper bound at coordinate {bad}"
            )
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def centered_box(dim: int, radius: float = 1.0) -> SamplingBox:
    """The global input space [-radius, radius]^dim."""
    r = np.full(dim, float(radius))
    return SamplingBox(-r, r)


def sample_box(box: SamplingBox, n: int, rng: SeededRng) -> np.ndarray:
    """Draw n latents i.i.d. uniformly from ``box``; returns an (n, D) array.

    Draws consume the rng row-major (all coordinates of candidate 0 first).
    Results are clamped into the box to guard the half-open scaling against
    last-ulp rounding when lower + (upper - lower) rounds past upper.
    """
    if n < 1:
        raise ConfigurationError(f"sample count must be >= 1, got {n}")
    samples = rng.uniform_matrix(box.lower, box.upper, n)
    np.clip(samples, box.lower[None, :], box.upper[None, :], out=samples)
    return samples


def shift_box(
    base_lower, base_upper, anchor, scale: float
) -> SamplingBox:
    """Box translated toward ``anchor``: bounds become base + scale * anchor."""
    lo = as_latent(base_lower)
    hi = as_latent(base_upper)
    a = as_latent(anchor)
    if not (lo.shape == hi.shape == a.shape):
        raise ConfigurationError(
            f"shift_box length mismatch: {lo.shape[0]}, {hi.shape[0]}, {a.shape[0]}"
        )
    if not 0.0 <= scale <= 1.0:
        raise ConfigurationError(f"shift scale must be in [0, 1], got {scale}")
    return SamplingBox(lo + scale * a, hi + scale * a)


def noise_box(anchor_neg, anchor_pos, unit, scale: float) -> SamplingBox:
    """Box [anchor_neg + scale*unit, anchor_pos + scale*unit], swapped coordinatewise.

    With anchor_pos = I_opt and anchor_neg = -I_opt, the raw interval is
    inverted on coordinates where I_opt[i] < scale * unit[i]; endpoints are
    swapped there so the box stays well-formed while still sampling around
    +/- I_opt with noise ``scale``.
    """
    neg = as_latent(anchor_neg)
    pos = as_latent(anchor_pos)
    u = as_latent(unit)
    if not (neg.shape == pos.shape == u.shape):
        raise ConfigurationError(
            f"noise_box length mismatch: {neg.shape[0]}, {pos.shape[0]}, {u.shape[0]}"
        )
    if not 0.0 <= scale <= 1.0:
        raise ConfigurationError(f"noise scale must be in [0, 1], got {scale}")
    raw_lo = neg + scale * u
    raw_hi = pos + scale * u
    return SamplingBox(np.minimum(raw_lo, raw_hi), np.maximum(raw_lo, raw_hi))
