"""Generator/embedder contracts and the identity-distance oracle.

A backend is anything with ``info() / generate(z) / embed(image)`` and,
optionally, a fused ``generate_embed_batch`` that skips materializing
images (the search only ever needs distances, never pixels). Identity
similarity is the squared L2 distance between embeddings, lower meaning
more similar; multi-image targets are scored by averaging the per-image
distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

from .core import as_latent_batch
from .errors import BackendError, ConfigurationError, DimensionError


@dataclass(frozen=True)
class ImageTensor:
    """A (channels, height, width) tensor of normalized intensities in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise DimensionError(f"image tensor must have shape (c, h, w), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("image tensor contains non-finite values")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ConfigurationError(
                f"image values must lie in [0, 1], got range [{v.min()}, {v.max()}]"
            )
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.values.shape)  # type: ignore[return-value]


@dataclass(frozen=True)
class BackendInfo:
    """Static facts a backend declares about itself."""

    latent_dim: int
    embedding_dim: int
    image_shape: tuple[int, int, int]
    backend_name: str
    supports_fused_generate_embed: bool = False
    allows_concurrent_calls: bool = False
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.latent_dim < 1 or self.embedding_dim < 1:
            raise ConfigurationError(
                f"backend dims must be >= 1, got latent_dim={self.latent_dim} "
                f"embedding_dim={self.embedding_dim}"
            )
        object.__setattr__(self, "image_shape", tuple(int(s) for s in self.image_shape))


def as_embedding(values, dim: int | None = None) -> np.ndarray:
    """Validate an embedding as a finite float64 1-D array."""
    e = np.asarray(values, dtype=np.float64)
    if e.ndim != 1:
        raise DimensionError(f"embedding must be one-dimensional, got shape {e.shape}")
    if dim is not None and e.shape[0] != dim:
        raise DimensionError(f"embedding has length {e.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(e)):
        raise ConfigurationError("embedding contains non-finite values")
    return e


@dataclass(frozen=True)
class TargetIdentity:
    """Embeddings of one or more reference images of the target person.

    ``reduction`` selects how per-image distances collapse to one score:
    "mean" (the default, and the only mode the acceptance suite uses) or
    "min".
    """

    embeddings: np.ndarray
    reduction: str = "mean"

    def __post_init__(self):
        e = np.asarray(self.embeddings, dtype=np.float64)
        if e.ndim == 1:
            e = e[None, :]
        if e.ndim != 2 or e.shape[0] == 0:
            raise ConfigurationError("target identity needs a nonempty (t, m) embedding array")
        if not np.all(np.isfinite(e)):
            raise ConfigurationError("target embeddings contain non-finite values")
        if self.reduction not in ("mean", "min"):
            raise ConfigurationError(f"unknown reduction {self.reduction!r}")
        object.__setattr__(self, "embeddings", e)

    @property
    def embedding_dim(self) -> int:
        return self.embeddings.shape[1]


@runtime_checkable
class Backend(Protocol):
    """Duck-typed backend contract; see SyntheticBackend and BridgeBackend."""

    def info(self) -> BackendInfo: ...

    def generate(self, z: np.ndarray) -> ImageTensor: ...

    def embed(self, image: ImageTensor) -> np.ndarray: ...


def distance(a, b) -> float:
    """Squared L2 distance between two embeddings."""
    av = as_embedding(a)
    bv = as_embedding(b)
    if av.shape != bv.shape:
        raise DimensionError(
            f"embedding length mismatch: {av.shape[0]} vs {bv.shape[0]}"
        )
    d = av - bv
    return float(np.sum(d * d))


def identity_score(embedding, target: TargetIdentity) -> float:
    """Reduce distances from ``embedding`` to every target embedding."""
    e = as_embedding(embedding, dim=target.embedding_dim)
    scores = [distance(e, t) for t in target.embeddings]
    if target.reduction == "min":
        return float(min(scores))
    return float(np.mean(scores))


def score_batch(zs, target: TargetIdentity, backend: Backend) -> np.ndarray:
    """Identity scores for a batch of latents, in input order.

    Uses the backend's fused generate+embed path when it declares one;
    otherwise composes generate and embed per latent. Either way the result
    equals the scalar pipeline elementwise.
    """
    info = backend.info()
    batch = as_latent_batch(zs, dim=info.latent_dim)
    if target.embedding_dim != info.embedding_dim:
        raise DimensionError(
            f"target embedding dim {target.embedding_dim} does not match "
            f"backend embedding dim {info.embedding_dim}"
        )
    if info.supports_fused_generate_embed:
        embeddings = backend.generate_embed_batch(batch)  # type: ignore[attr-defined]
        embeddings = np.asarray(embeddings, dtype=np.float64)
        if embeddings.shape != (batch.shape[0], info.embedding_dim):
            raise BackendError(
                f"fused path returned shape {embeddings.shape}, "
                f"expected {(batch.shape[0], info.embedding_dim)}"
            )
    else:
        rows = []
        for i, z in enumerate(batch):
            try:
                rows.append(backend.embed(backend.generate(z)))
            except BackendError as exc:
                raise BackendError(f"candidate {i}: {exc}", index=i) from exc
        embeddings = np.asarray(rows, dtype=np.float64)
    return np.array([identity_score(e, target) for e in embeddings], dtype=np.float64)
