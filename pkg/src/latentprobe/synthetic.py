"""A deterministic toy generator/embedder with planted identity structure.

The "image" for latent z is the concatenation [A.sgn(z); B.z] (identity
block, then attribute block), scaled by 1/sqrt(D) and affinely squashed
into [0, 1]. The embedder inverts the squash and returns the identity
block, so identity is exactly the sign pattern of z: adding noise below
the smallest |z_i|, flipping nothing, changes nothing; rescaling z by any
positive factor changes nothing; applying sgn itself changes nothing.
That makes every search-level claim checkable at desk scale, and optima
enumerable for small D.

Construction notes that matter for reproducibility:

- A and B entries are drawn from the splitmix64 stream of ``seed`` (A
  row-major first, then B) as signed multiples of 2**-20 in [-1, 1). Dot
  products against sign vectors are therefore exact in float64 no matter
  how the sum is associated, so BLAS, naive loops, and other-language
  reimplementations agree bit for bit.
- The 1/sqrt(D) scale is applied to the dot product, not the stored
  entries, to keep that exactness.
- Emitted embeddings are rounded to float32 grain, matching the wire and
  file width, so in-process and remote pipelines see identical numbers.
"""

from __future__ import annotations

import numpy as np

from .backend import Backend, BackendInfo, ImageTensor, as_embedding, distance
from .core import as_latent, as_latent_batch
from .errors import BackendError, ConfigurationError, DimensionError
from .rng import SeededRng, stream_words

ENTRY_BITS = 20
_ENTRY_SCALE = 2.0 ** -ENTRY_BITS
_ENTRY_OFFSET = 1 << ENTRY_BITS

# Squash half-range in units of sqrt(D); latents with sup-norm beyond this
# would squash outside [0, 1].
MAX_AMPLITUDE = 32.0


def sgn(z: np.ndarray) -> np.ndarray:
    """Elementwise sign with sgn(0) = +0.0 (never -0.0)."""
    return np.sign(z) + 0.0


def _matrix_entries(seed: int, start: int, rows: int, cols: int) -> np.ndarray:
    words = stream_words(seed, start, rows * cols)
    t = (words >> np.uint64(64 - ENTRY_BITS - 1)).astype(np.int64)
    return ((t - _ENTRY_OFFSET).astype(np.float64) * _ENTRY_SCALE).reshape(rows, cols)


class SyntheticModel:
    """Mixing matrices and squash parameters, fully determined by (D, m, k, seed)."""

    def __init__(self, latent_dim: int = 64, embedding_dim: int = 32,
                 attribute_dim: int = 16, seed: int = 42):
        if min(latent_dim, embedding_dim, attribute_dim) < 1:
            raise ConfigurationError("synthetic dims must all be >= 1")
        self.latent_dim = latent_dim
        self.embedding_dim = embedding_dim
        self.attribute_dim = attribute_dim
        self.seed = seed
        self.a_raw = _matrix_entries(seed, 0, embedding_dim, latent_dim)
        self.b_raw = _matrix_entries(seed, embedding_dim * latent_dim, attribute_dim, latent_dim)
        self.sqrt_dim = float(np.sqrt(latent_dim))
        self.squash_offset = 0.5
        self.squash_scale = 2.0 * MAX_AMPLITUDE * self.sqrt_dim

    @classmethod
    def from_config(cls, cfg: dict) -> "SyntheticModel":
        return cls(
            latent_dim=int(cfg.get("D", 64)),
            embedding_dim=int(cfg.get("m", 32)),
            attribute_dim=int(cfg.get("k", 16)),
            seed=int(cfg.get("seed", 42)),
        )

    def identity_block(self, z: np.ndarray) -> np.ndarray:
        """A.sgn(z) / sqrt(D); exact in every summation order."""
        return (self.a_raw @ sgn(z)) / self.sqrt_dim

    def attribute_block(self, z: np.ndarray) -> np.ndarray:
        return (self.b_raw @ z) / self.sqrt_dim


class SyntheticBackend:
    """Backend over a :class:`SyntheticModel`; stateless and deterministic."""

    def __init__(self, model: SyntheticModel):
        self.model = model
        m = model
        self._info = BackendInfo(
            latent_dim=m.latent_dim,
            embedding_dim=m.embedding_dim,
            image_shape=(1, 1, m.embedding_dim + m.attribute_dim),
            backend_name=f"synthetic(D={m.latent_dim},m={m.embedding_dim},"
                         f"k={m.attribute_dim},seed={m.seed})",
            supports_fused_generate_embed=True,
            allows_concurrent_calls=True,
            extras={
                "squash_offset": m.squash_offset,
                "squash_scale": m.squash_scale,
                "attribute_dim": m.attribute_dim,
            },
        )

    @classmethod
    def from_config(cls, cfg: dict) -> "SyntheticBackend":
        return cls(SyntheticModel.from_config(cfg))

    def info(self) -> BackendInfo:
        return self._info

    def generate(self, z) -> ImageTensor:
        m = self.model
        zv = as_latent(z, dim=m.latent_dim)
        if np.max(np.abs(zv)) > MAX_AMPLITUDE:
            raise BackendError(
                f"latent sup-norm {np.max(np.abs(zv)):g} exceeds the synthetic "
                f"generator's squash range ({MAX_AMPLITUDE:g})"
            )
        blocks = np.concatenate([m.identity_block(zv), m.attribute_block(zv)])
        pixels = m.squash_offset + blocks / m.squash_scale
        return ImageTensor(pixels.reshape(self._info.image_shape))

    def embed(self, image: ImageTensor) -> np.ndarray:
        m = self.model
        if image.shape != self._info.image_shape:
            raise DimensionError(
                f"image shape {image.shape} does not match backend shape "
                f"{self._info.image_shape}"
            )
        flat = image.values.ravel()[: m.embedding_dim]
        block = (flat - m.squash_offset) * m.squash_scale
        return _f32_grain(block)

    def generate_embed_batch(self, zs) -> np.ndarray:
        m = self.model
        batch = as_latent_batch(zs, dim=m.latent_dim)
        dots = sgn(batch) @ m.a_raw.T
        return _f32_grain(dots / m.sqrt_dim)

    def unsquash_attribute_block(self, image: ImageTensor) -> np.ndarray:
        """Recover the attribute block B.z / sqrt(D) from a generated image."""
        m = self.model
        flat = image.values.ravel()[m.embedding_dim:]
        return (flat - m.squash_offset) * m.squash_scale


def _f32_grain(x: np.ndarray) -> np.ndarray:
    """Round to float32 precision but keep float64 dtype."""
    return np.asarray(x, dtype=np.float32).astype(np.float64)


def property_probe(
    backend: Backend,
    z,
    probe: str,
    *,
    amplitude: float = 0.5,
    trials: int = 100,
    factor: float = 2.0,
    rng: SeededRng | None = None,
) -> float:
    """Latent-space invariance diagnostics; returns the max observed distance.

    probe="noise": perturb z by ``trials`` uniform draws in [-amplitude,
    amplitude]^D and report the worst identity drift. probe="sign": compare
    against sgn(z). probe="scale": compare against factor * z (factor > 0).
    Exact zeros on the synthetic backend; on real backends this reports the
    actual deviation. Embeddings come from the fused generate+embed path
    when the backend declares one (the same pipeline the search scores
    through), falling back to composing generate and embed.
    """
    info = backend.info()
    zv = as_latent(z, dim=info.latent_dim)

    if info.supports_fused_generate_embed:
        def pipeline(latent: np.ndarray) -> np.ndarray:
            return as_embedding(
                np.asarray(backend.generate_embed_batch(latent[None, :]))[0]  # type: ignore[attr-defined]
            )
    else:
        def pipeline(latent: np.ndarray) -> np.ndarray:
            return as_embedding(backend.embed(backend.generate(latent)))

    base = pipeline(zv)

    def drift(other: np.ndarray) -> float:
        return distance(base, pipeline(other))

    if probe == "noise":
        if amplitude < 0:
            raise ConfigurationError(f"noise amplitude must be >= 0, got {amplitude}")
        if trials < 1:
            raise ConfigurationError(f"noise probe needs trials >= 1, got {trials}")
        rng = rng if rng is not None else SeededRng(seed=0)
        worst = 0.0
        for _ in range(trials):
            u = rng.uniform(-amplitude, amplitude, zv.shape[0])
            worst = max(worst, drift(zv + u))
        return worst
    if probe == "sign":
        return drift(sgn(zv))
    if probe == "scale":
        if factor <= 0:
            raise ConfigurationError(f"scale factor must be positive, got {factor}")
        return drift(factor * zv)
    raise ConfigurationError(f"unknown probe {probe!r}; expected noise, sign, or scale")
