"""Greedy box search for a latent whose output matches a target identity.

Three phases over a pluggable backend: a global random probe of [-1, 1]^D,
a coarse phase whose sampling box drifts toward the incumbent by a growing
factor alpha, and a fine phase sampling around +/-incumbent with noise beta.
Every phase keeps the incumbent unless a candidate strictly beats it, so the
best score is non-increasing across the whole trace. Each phase is bounded
by a round cap so unreachable thresholds still terminate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .backend import Backend, TargetIdentity, score_batch
from .core import as_latent, centered_box, noise_box, sample_box, shift_box, SamplingBox
from .errors import BackendError, ConfigurationError
from .rng import SeededRng

INIT_STREAM = 0
COARSE_STREAM_BASE = 10_000
FINE_STREAM_BASE = 20_000

_CONFIG_FIELDS = (
    "N", "T", "latent_dim", "alpha_start", "alpha_step", "alpha_max",
    "beta_start", "beta_step", "beta_max", "max_rounds_per_stage", "seed",
)


@dataclass
class SearchConfig:
    """All search parameters; defaults follow the reference setup."""

    N: int = 1000
    T: float = 0.4
    latent_dim: int = 200
    alpha_start: float = 0.1
    alpha_step: float = 0.1
    alpha_max: float = 1.0
    beta_start: float = 0.1
    beta_step: float = 0.1
    beta_max: float = 1.0
    max_rounds_per_stage: int = 50
    seed: int = 0

    def validate(self) -> None:
        if self.N < 1:
            raise ConfigurationError(f"N must be >= 1, got {self.N}")
        if not self.T > 0:
            raise ConfigurationError(f"T must be > 0, got {self.T}")
        if self.latent_dim < 1:
            raise ConfigurationError(f"latent_dim must be >= 1, got {self.latent_dim}")
        for name, start, step, cap in (
            ("alpha", self.alpha_start, self.alpha_step, self.alpha_max),
            ("beta", self.beta_start, self.beta_step, self.beta_max),
        ):
            if not 0.0 <= start <= cap <= 1.0:
                raise ConfigurationError(
                    f"need 0 <= {name}_start <= {name}_max <= 1, got {start}, {cap}"
                )
            if not step > 0:
                raise ConfigurationError(f"{name}_step must be > 0, got {step}")
        if self.max_rounds_per_stage < 1:
            raise ConfigurationError(
                f"max_rounds_per_stage must be >= 1, got {self.max_rounds_per_stage}"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"seed must be a u64, got {self.seed}")

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        unknown = set(data) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigurationError(f"unknown search config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TraceRecord:
    stage: str  # "init" | "coarse" | "fine"
    round_index: int
    alpha_or_beta: float
    candidates_evaluated: int
    best_score_after: float
    rng_substream_id: int


@dataclass
class SearchTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def total_evaluations(self) -> int:
        return sum(r.candidates_evaluated for r in self.records)

    def to_jsonable(self) -> list[dict]:
        return [asdict(r) for r in self.records]


@dataclass
class SearchResult:
    best_latent: np.ndarray
    best_score: float
    terminated_by: str  # "threshold" | "round_cap_coarse" | "round_cap_fine"
    trace: SearchTrace

    def to_jsonable(self) -> dict:
        return {
            "best_latent": [float(x) for x in self.best_latent],
            "best_score": self.best_score,
            "terminated_by": self.terminated_by,
            "trace": self.trace.to_jsonable(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), indent=2) + "\n"


def select_optimal(candidates, scores) -> tuple[int, np.ndarray]:
    """First index attaining the minimum score (strict-less scan), plus its latent."""
    cands = np.asarray(candidates, dtype=np.float64)
    if cands.ndim == 1:
        cands = cands[None, :]
    vals = np.asarray(scores, dtype=np.float64)
    if cands.shape[0] == 0 or vals.shape[0] == 0:
        raise ConfigurationError("select_optimal needs at least one candidate")
    if cands.shape[0] != vals.shape[0]:
        raise ConfigurationError(
            f"{cands.shape[0]} candidates but {vals.shape[0]} scores"
        )
    best = 0
    for i in range(1, vals.shape[0]):
        if vals[i] < vals[best]:
            best = i
    return best, cands[best]


def _check_setup(target: TargetIdentity, backend: Backend, config: SearchConfig) -> None:
    config.validate()
    info = backend.info()
    if info.latent_dim != config.latent_dim:
        raise ConfigurationError(
            f"config latent_dim {config.latent_dim} does not match backend "
            f"latent_dim {info.latent_dim}"
        )
    if target.embedding_dim != info.embedding_dim:
        raise ConfigurationError(
            f"target embedding dim {target.embedding_dim} does not match backend "
            f"embedding dim {info.embedding_dim}"
        )


def _round(box: SamplingBox, stream_id: int, target, backend, config):
    rng = SeededRng(config.seed).split(stream_id)
    cands = sample_box(box, config.N, rng)
    scores = score_batch(cands, target, backend)
    idx, vec = select_optimal(cands, scores)
    return vec, float(scores[idx])


def init_stage(
    target: TargetIdentity, backend: Backend, config: SearchConfig
) -> tuple[np.ndarray, float, TraceRecord]:
    """Probe the global box [-1, 1]^D with N draws and keep the best."""
    _check_setup(target, backend, config)
    box = centered_box(config.latent_dim)
    vec, score = _round(box, INIT_STREAM, target, backend, config)
    record = TraceRecord("init", 0, 0.0, config.N, score, INIT_STREAM)
    return vec, score, record


def coarse_stage(
    incumbent, score: float, target: TargetIdentity, backend: Backend, config: SearchConfig
) -> tuple[np.ndarray, float, list[TraceRecord]]:
    """Drift the global box toward the incumbent while the score exceeds T.

    Round r samples N latents from [-1 + alpha*incumbent, 1 + alpha*incumbent],
    then alpha grows by alpha_step up to alpha_max. The incumbent survives
    unless strictly beaten.
    """
    _check_setup(target, backend, config)
    incumbent = as_latent(incumbent, dim=config.latent_dim)
    base = centered_box(config.latent_dim)
    alpha = config.alpha_start
    records: list[TraceRecord] = []
    for r in range(config.max_rounds_per_stage):
        if score <= config.T:
            break
        box = shift_box(base.lower, base.upper, incumbent, alpha)
        vec, round_best = _round(box, COARSE_STREAM_BASE + r, target, backend, config)
        if round_best < score:
            incumbent, score = vec, round_best
        records.append(
            TraceRecord("coarse", r, alpha, config.N, score, COARSE_STREAM_BASE + r)
        )
        alpha = min(alpha + config.alpha_step, config.alpha_max)
    return incumbent, score, records


def fine_stage(
    incumbent, score: float, target: TargetIdentity, backend: Backend, config: SearchConfig
) -> tuple[np.ndarray, float, list[TraceRecord]]:
    """Sample around +/-incumbent with growing noise beta while score exceeds T.

    Round r uses the coordinatewise-swapped box [-incumbent + beta, incumbent
    + beta]; beta grows by beta_step up to beta_max.
    """
    _check_setup(target, backend, config)
    incumbent = as_latent(incumbent, dim=config.latent_dim)
    unit = np.ones(config.latent_dim)
    beta = config.beta_start
    records: list[TraceRecord] = []
    for r in range(config.max_rounds_per_stage):
        if score <= config.T:
            break
        box = noise_box(-incumbent, incumbent, unit, beta)
        vec, round_best = _round(box, FINE_STREAM_BASE + r, target, backend, config)
        if round_best < score:
            incumbent, score = vec, round_best
        records.append(
            TraceRecord("fine", r, beta, config.N, score, FINE_STREAM_BASE + r)
        )
        beta = min(beta + config.beta_step, config.beta_max)
    return incumbent, score, records


def search(target: TargetIdentity, backend: Backend, config: SearchConfig) -> SearchResult:
    """Run init, coarse, and fine phases; stop as soon as the score reaches T.

    Backend failures abort the search; the raised BackendError carries the
    trace records accumulated so far.
    """
    _check_setup(target, backend, config)
    trace = SearchTrace()
    try:
        incumbent, score, record = init_stage(target, backend, config)
        trace.records.append(record)
        incumbent, score, records = coarse_stage(incumbent, score, target, backend, config)
        coarse_rounds = len(records)
        trace.records.extend(records)
        incumbent, score, records = fine_stage(incumbent, score, target, backend, config)
        fine_rounds = len(records)
        trace.records.extend(records)
    except BackendError as exc:
        exc.trace = trace.records
        raise
    if score <= config.T:
        terminated_by = "threshold"
    elif fine_rounds == 0 and coarse_rounds >= config.max_rounds_per_stage:
        terminated_by = "round_cap_coarse"  # unreachable with both caps >= 1; see docs
    else:
        terminated_by = "round_cap_fine"
    return SearchResult(incumbent, score, terminated_by, trace)
