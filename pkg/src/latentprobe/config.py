"""Run manifests: backend specs, target specs, and search parameters.

A manifest is one JSON document naming everything a run needs. All
referenced files are read and validated before any backend is constructed,
so a typo fails fast instead of mid-search.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import TargetIdentity
from .bridge import BridgeBackend, BridgeConfig
from .errors import ConfigurationError
from .latentio import read_latents
from .pnm import read_pnm
from .search import SearchConfig
from .synthetic import SyntheticBackend


@dataclass
class RunManifest:
    backend_spec: dict
    target_spec: dict
    search: SearchConfig
    out_dir: Path
    base_dir: Path
    # targets resolved eagerly: either embeddings, or inputs still needing a backend
    target_embeddings: np.ndarray | None = None
    target_latents: np.ndarray | None = None
    target_images: list | None = None
    reduction: str = "mean"
    extras: dict = field(default_factory=dict)


def load_manifest(path, *, seed_override: int | None = None,
                  out_override=None) -> RunManifest:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"manifest file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("backend", "target"):
        if key not in doc:
            raise ConfigurationError(f"{path}: manifest missing {key!r} section")
    base = path.parent
    search = SearchConfig.from_dict(doc.get("search", {}))
    if "seed" in doc:
        search.seed = int(doc["seed"])
    if seed_override is not None:
        search.seed = seed_override
    search.validate()
    out_dir = Path(out_override) if out_override else base / doc.get("out_dir", "out")

    manifest = RunManifest(
        backend_spec=doc["backend"],
        target_spec=doc["target"],
        search=search,
        out_dir=out_dir,
        base_dir=base,
        reduction=doc.get("target", {}).get("reduction", "mean"),
        extras={k: v for k, v in doc.items()
                if k not in ("backend", "target", "search", "out_dir", "seed")},
    )
    _resolve_target_inputs(manifest)
    return manifest


def _resolve_target_inputs(manifest: RunManifest) -> None:
    spec = manifest.target_spec
    base = manifest.base_dir
    keys = [k for k in ("embeddings_file", "latents_file", "images") if k in spec]
    if len(keys) != 1:
        raise ConfigurationError(
            "target spec needs exactly one of 'embeddings_file', 'latents_file', 'images'"
        )
    key = keys[0]
    if key == "embeddings_file":
        manifest.target_embeddings = read_latents(base / spec[key])
    elif key == "latents_file":
        manifest.target_latents = read_latents(base / spec[key])
    else:
        manifest.target_images = [read_pnm(base / p) for p in spec[key]]


def build_backend(spec: dict, base_dir: Path | None = None):
    """Construct a backend from its JSON spec; caller owns close() if present."""
    kind = spec.get("type")
    if kind == "synthetic":
        return SyntheticBackend.from_config(spec)
    if kind == "bridge":
        transport = spec.get("transport", "stdio")
        if transport == "stdio":
            cfg = BridgeConfig(
                transport="stdio",
                command=[str(c) for c in spec["command"]],
                timeout_ms=int(spec.get("timeout_ms", 30_000)),
                max_batch=int(spec.get("max_batch", 256)),
            )
        elif transport == "tcp":
            host, _, port = str(spec["address"]).partition(":")
            cfg = BridgeConfig(
                transport="tcp",
                address=(host, int(port)),
                timeout_ms=int(spec.get("timeout_ms", 30_000)),
                max_batch=int(spec.get("max_batch", 256)),
            )
        else:
            raise ConfigurationError(f"unknown bridge transport {transport!r}")
        return BridgeBackend.from_config(cfg)
    raise ConfigurationError(f"unknown backend type {kind!r}")


def resolve_target(manifest: RunManifest, backend) -> TargetIdentity:
    """Finish target construction, embedding latents/images via the backend if needed."""
    if manifest.target_embeddings is not None:
        return TargetIdentity(manifest.target_embeddings, reduction=manifest.reduction)
    if manifest.target_latents is not None:
        embeddings = [backend.embed(backend.generate(z)) for z in manifest.target_latents]
        return TargetIdentity(np.asarray(embeddings), reduction=manifest.reduction)
    embeddings = [backend.embed(img) for img in manifest.target_images]
    return TargetIdentity(np.asarray(embeddings), reduction=manifest.reduction)
