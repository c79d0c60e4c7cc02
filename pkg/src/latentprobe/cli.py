"""Command-line surface: search, arith, props, eval, demo.

Exit codes: 0 success (search: threshold reached), 2 search ended by a
round cap, 1 any error. Set LATENTPROBE_LOG=debug for per-round logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .attributes import apply_attribute, load_recipe
from .backend import TargetIdentity
from .config import build_backend, load_manifest, resolve_target
from .errors import (
    BackendError,
    ConfigurationError,
    DimensionError,
    FormatError,
    LatentProbeError,
    ProtocolError,
    TransportError,
)
from .latentio import read_latents, write_latents
from .pnm import write_pnm
from .rng import SeededRng
from .search import SearchConfig, search
from .synthetic import SyntheticBackend, SyntheticModel, property_probe

logger = logging.getLogger("latentprobe")

_ERROR_PROVENANCE = {
    ConfigurationError: "configuration error",
    DimensionError: "dimension error",
    FormatError: "format error",
    BackendError: "backend error",
    ProtocolError: "protocol error",
    TransportError: "transport error",
}


def _provenance(exc: Exception) -> str:
    for cls, label in _ERROR_PROVENANCE.items():
        if isinstance(exc, cls):
            return label
    return "error"


def _load_backend_spec(path: str | None) -> dict:
    if path is None:
        return {"type": "synthetic", "D": 64, "m": 32, "k": 16, "seed": 42}
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    doc = json.loads(p.read_text())
    return doc.get("backend", doc)


def cmd_search(args) -> int:
    manifest = load_manifest(args.config, seed_override=args.seed, out_override=args.out)
    backend = build_backend(manifest.backend_spec, manifest.base_dir)
    try:
        target = resolve_target(manifest, backend)
        result = search(target, backend, manifest.search)
        out = manifest.out_dir
        out.mkdir(parents=True, exist_ok=True)
        (out / "result.json").write_text(result.to_json())
        (out / "trace.json").write_text(
            json.dumps(result.trace.to_jsonable(), indent=2) + "\n"
        )
        write_latents(out / "best.lvec", result.best_latent[None, :], fmt=args.format)
        try:
            write_pnm(out / "best.pnm", backend.generate(result.best_latent))
        except (LatentProbeError, NotImplementedError) as exc:
            logger.warning("skipping image export: %s", exc)
        if args.json:
            sys.stdout.write(result.to_json())
        else:
            print(f"best_score={result.best_score!r} terminated_by={result.terminated_by} "
                  f"evaluations={result.trace.total_evaluations()}")
            print(f"outputs written to {out}")
        return 0 if result.terminated_by == "threshold" else 2
    finally:
        if hasattr(backend, "close"):
            backend.close()


def cmd_arith(args) -> int:
    base = read_latents(args.base)
    if base.shape[0] != 1:
        raise ConfigurationError(
            f"{args.base} holds {base.shape[0]} vectors; arith expects exactly one"
        )
    recipe = load_recipe(args.recipe)
    direction = 1 if args.direction == "add" else -1
    edited = apply_attribute(base[0], recipe, direction)
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    suffix = "plus" if direction == 1 else "minus"
    target = out / f"{recipe.name}_{suffix}.lvec"
    write_latents(target, edited[None, :], fmt=args.format)
    rendered = ""
    if args.render:
        backend = build_backend(_load_backend_spec(args.config))
        try:
            image_path = out / f"{recipe.name}_{suffix}.pnm"
            write_pnm(image_path, backend.generate(edited))
            rendered = f" and {image_path}"
        finally:
            if hasattr(backend, "close"):
                backend.close()
    print(f"wrote {target}{rendered}")
    return 0


def _probe_base_latent(dim: int, amplitude: float, seed: int) -> np.ndarray:
    """A latent with per-coordinate magnitude above the noise amplitude.

    Margin is amplitude + 0.1 (capped at 0.9) so the noise probe measures
    identity drift rather than deliberate sign flips.
    """
    margin = min(amplitude + 0.1, 0.9)
    rng = SeededRng(seed)
    magnitude = margin + (1.0 - margin) * rng.unit(dim)
    signs = np.where(rng.unit(dim) < 0.5, -1.0, 1.0)
    return signs * magnitude


def cmd_props(args) -> int:
    backend = build_backend(_load_backend_spec(args.config))
    try:
        info = backend.info()
        z = _probe_base_latent(info.latent_dim, args.amplitude, args.seed)
        noise_rng = SeededRng(args.seed).split(1)
        rows = [
            ("noise", f"amp={args.amplitude:g} trials={args.trials}",
             property_probe(backend, z, "noise", amplitude=args.amplitude,
                            trials=args.trials, rng=noise_rng)),
            ("sign", "", property_probe(backend, z, "sign")),
        ]
        for factor in (0.5, 2.0, 10.0):
            rows.append(("scale", f"c={factor:g}",
                         property_probe(backend, z, "scale", factor=factor)))
        if args.json:
            doc = [{"probe": name, "params": params, "max_distance": value,
                    "pass": value <= args.tolerance}
                   for name, params, value in rows]
            print(json.dumps(doc, indent=2))
        else:
            print(f"{'probe':<8}{'params':<24}{'max_distance':<16}result")
            for name, params, value in rows:
                verdict = "pass" if value <= args.tolerance else "FAIL"
                print(f"{name:<8}{params:<24}{value!r:<16}{verdict}")
        return 0
    finally:
        if hasattr(backend, "close"):
            backend.close()


def _pair_scores_from_files(paths: list[str]) -> tuple[int, list[float]]:
    from .backend import distance

    vectors = [read_latents(p) for p in paths]
    embeddings = np.concatenate(vectors, axis=0)
    n = embeddings.shape[0]
    scores = [distance(embeddings[i], embeddings[j])
              for i in range(n) for j in range(i + 1, n)]
    return n, scores


def _pair_scores_from_json(path: str) -> tuple[int, list[float]]:
    doc = json.loads(Path(path).read_text())
    scores = [float(x) for x in (doc["scores"] if isinstance(doc, dict) else doc)]
    # recover n from n*(n-1)/2 == len(scores)
    n = 1
    while n * (n - 1) // 2 < len(scores):
        n += 1
    if n * (n - 1) // 2 != len(scores):
        raise ConfigurationError(
            f"{len(scores)} scores is not a full pair table for any item count"
        )
    return n, scores


def cmd_eval(args) -> int:
    if args.scores:
        n, scores = _pair_scores_from_json(args.scores)
    elif args.files:
        n, scores = _pair_scores_from_files(args.files)
    else:
        raise ConfigurationError("eval needs embedding files or --scores")
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    if args.json:
        doc = [{"pair": [i, j], "score": s} for (i, j), s in zip(pairs, scores)]
        print(json.dumps(doc, indent=2))
    else:
        print("pair  score")
        for (i, j), s in zip(pairs, scores):
            print(f"({i},{j})  {s:.8f}")
    return 0


def cmd_demo(args) -> int:
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="latentprobe-demo-"))
    out.mkdir(parents=True, exist_ok=True)
    backend_spec = {"type": "synthetic", "D": 8, "m": 32, "k": 16, "seed": 42}
    backend = SyntheticBackend(SyntheticModel(8, 32, 16, 42))
    planted = _probe_base_latent(8, 0.5, seed=2024)
    target_embedding = backend.embed(backend.generate(planted))
    write_latents(out / "target.lvec", target_embedding[None, :])
    manifest = {
        "backend": backend_spec,
        "target": {"embeddings_file": "target.lvec"},
        "search": {"N": 64, "T": 0.4, "latent_dim": 8, "seed": int(args.seed or 1)},
        "out_dir": "run",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    result = search(TargetIdentity(target_embedding[None, :]), backend,
                    SearchConfig.from_dict(manifest["search"]))
    monotone = all(
        a.best_score_after >= b.best_score_after
        for a, b in zip(result.trace.records, result.trace.records[1:])
    )
    budget = result.trace.total_evaluations()
    rounds = len(result.trace.records)
    sign_drift = property_probe(backend, planted, "sign")
    scale_drift = property_probe(backend, planted, "scale", factor=2.0)
    print("demo: synthetic end-to-end (D=8, N=64)")
    print(f"  [{'ok' if result.best_score == 0.0 else '??'}] "
          f"search best_score={result.best_score!r} ({result.terminated_by})")
    print(f"  [{'ok' if monotone else 'XX'}] trace monotone over {rounds} records")
    print(f"  [{'ok' if budget == 64 * rounds else 'XX'}] "
          f"budget exact: {budget} evaluations = N x rounds")
    print(f"  [{'ok' if sign_drift == 0.0 else 'XX'}] sign probe drift {sign_drift!r}")
    print(f"  [{'ok' if scale_drift == 0.0 else 'XX'}] scale probe drift {scale_drift!r}")
    print(f"  manifest written to {out / 'manifest.json'}; rerun with:")
    print(f"    latentprobe search --config {out / 'manifest.json'}")
    return 0 if result.terminated_by == "threshold" else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentprobe",
        description="Latent-space search against an identity-distance oracle",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the box search described by a manifest")
    p.add_argument("--config", required=True, help="manifest JSON path")
    p.add_argument("--seed", type=int, default=None, help="override manifest seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--json", action="store_true", help="print result JSON to stdout")
    p.add_argument("--format", choices=("binary", "json"), default="binary",
                   help="latent file format for best.lvec")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("arith", help="apply an attribute edit to a latent file")
    p.add_argument("base", help="latent file holding exactly one vector")
    p.add_argument("recipe", help="recipe JSON path")
    p.add_argument("--direction", choices=("add", "remove"), default="add")
    p.add_argument("--out", default=None)
    p.add_argument("--render", action="store_true", help="also render via the backend")
    p.add_argument("--config", default=None, help="backend spec JSON for --render")
    p.add_argument("--format", choices=("binary", "json"), default="binary",
                   help="latent file format for the edited vector")
    p.set_defaults(func=cmd_arith)

    p = sub.add_parser("props", help="probe latent-space invariances of a backend")
    p.add_argument("--config", default=None, help="backend spec JSON (default: synthetic)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--tolerance", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_props)

    p = sub.add_parser("eval", help="print the all-pairs embedding distance table")
    p.add_argument("files", nargs="*", help="embedding .lvec files")
    p.add_argument("--scores", default=None, help="JSON file of precomputed pair scores")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("demo", help="synthetic end-to-end run with a summary")
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("LATENTPROBE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LatentProbeError as exc:
        print(f"error: {_provenance(exc)}: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
