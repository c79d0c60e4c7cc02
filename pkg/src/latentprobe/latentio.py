"""Latent file persistence.

Binary format (little-endian): magic ``LVEC``, u32 version=1, u32 dim,
u32 count, then count*dim IEEE-754 float32 values. A JSON alternative
``{"dim": D, "vectors": [[...], ...]}`` is accepted on read and written only
on request. Values are stored at float32 precision; computation elsewhere
stays in float64, so a write/read round trip reproduces ``float32(v)``
exactly and is the identity for values already at float32 grain (everything
this package itself persists).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import as_latent_batch
from .errors import ConfigurationError, FormatError

MAGIC = b"LVEC"
VERSION = 1

_F32_MAX = float(np.finfo(np.float32).max)


def write_latents(path, vectors, fmt: str = "binary") -> None:
    """Write latents (or any fixed-dimension real vectors) to ``path``.

    ``vectors`` is a nonempty (n, D) array-like of finite values within
    float32 range. ``fmt`` is "binary" (default) or "json".
    """
    batch = as_latent_batch(vectors)
    if batch.shape[0] == 0:
        raise ConfigurationError("refusing to write an empty latent file")
    if np.any(np.abs(batch) > _F32_MAX):
        raise ConfigurationError("values exceed float32 range and cannot be stored losslessly")
    path = Path(path)
    data = batch.astype("<f4")
    if fmt == "binary":
        header = MAGIC + struct.pack("<III", VERSION, batch.shape[1], batch.shape[0])
        path.write_bytes(header + data.tobytes())
    elif fmt == "json":
        doc = {"dim": batch.shape[1], "vectors": [[float(x) for x in row] for row in data]}
        path.write_text(json.dumps(doc, indent=2) + "\n")
    else:
        raise ConfigurationError(f"unknown latent file format {fmt!r}")


def read_latents(path) -> np.ndarray:
    """Read a latent file written by :func:`write_latents`; returns (n, D) float64.

    Returned values are exactly the stored float32 values. Raises FormatError
    (with a byte offset for the binary format) on any structural violation.
    """
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] == MAGIC:
        return _read_binary(blob)
    return _read_json(blob, path)


def _read_binary(blob: bytes) -> np.ndarray:
    if len(blob) < 16:
        raise FormatError("truncated header: need 16 bytes of magic and counts", offset=len(blob))
    version, dim, count = struct.unpack("<III", blob[4:16])
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if dim == 0 or count == 0:
        raise FormatError(f"degenerate dimensions dim={dim} count={count}", offset=8)
    expected = 16 + 4 * dim * count
    if len(blob) != expected:
        raise FormatError(
            f"payload length {len(blob) - 16} disagrees with header "
            f"(dim={dim}, count={count} needs {expected - 16} bytes)",
            offset=min(len(blob), expected),
        )
    values = np.frombuffer(blob, dtype="<f4", offset=16).astype(np.float64)
    out = values.reshape(count, dim)
    if not np.all(np.isfinite(out)):
        bad = int(np.argmin(np.isfinite(out.ravel())))
        raise FormatError("non-finite value in payload", offset=16 + 4 * bad)
    return out


def _read_json(blob: bytes, path: Path) -> np.ndarray:
    try:
        doc = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError(f"{path} has neither LVEC magic nor valid JSON", offset=0) from None
    if not isinstance(doc, dict) or "dim" not in doc or "vectors" not in doc:
        raise FormatError(f"{path}: JSON latent file needs 'dim' and 'vectors' keys")
    try:
        batch = as_latent_batch(doc["vectors"], dim=int(doc["dim"]))
    except Exception as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if batch.shape[0] == 0:
        raise FormatError(f"{path}: empty vector list")
    return batch.astype(np.float32).astype(np.float64)
