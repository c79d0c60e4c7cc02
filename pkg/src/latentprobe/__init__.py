"""latentprobe: derivative-free latent-space search against identity oracles.

Find a generator input whose output is closest to a target identity under a
pluggable embedding-distance backend, then derive attribute-edited variants
by averaged-exemplar vector arithmetic. A synthetic backend with planted
identity structure makes the whole pipeline verifiable at desk scale; real
model servers attach over a newline-delimited JSON wire protocol.
"""

from .attributes import (
    AttributeRecipe,
    apply_attribute,
    attribute_vector,
    generate_variants,
    load_recipe,
)
from .backend import (
    Backend,
    BackendInfo,
    ImageTensor,
    TargetIdentity,
    distance,
    identity_score,
    score_batch,
)
from .bridge import BridgeBackend, BridgeClient, BridgeConfig
from .core import SamplingBox, centered_box, noise_box, sample_box, shift_box
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
from .rng import SeededRng
from .search import (
    SearchConfig,
    SearchResult,
    SearchTrace,
    TraceRecord,
    coarse_stage,
    fine_stage,
    init_stage,
    search,
    select_optimal,
)
from .synthetic import SyntheticBackend, SyntheticModel, property_probe

__version__ = "0.1.0"

__all__ = [
    "AttributeRecipe",
    "Backend",
    "BackendError",
    "BackendInfo",
    "BridgeBackend",
    "BridgeClient",
    "BridgeConfig",
    "ConfigurationError",
    "DimensionError",
    "FormatError",
    "ImageTensor",
    "LatentProbeError",
    "ProtocolError",
    "SamplingBox",
    "SearchConfig",
    "SearchResult",
    "SearchTrace",
    "SeededRng",
    "SyntheticBackend",
    "SyntheticModel",
    "TargetIdentity",
    "TraceRecord",
    "TransportError",
    "apply_attribute",
    "attribute_vector",
    "centered_box",
    "coarse_stage",
    "distance",
    "fine_stage",
    "generate_variants",
    "identity_score",
    "init_stage",
    "load_recipe",
    "noise_box",
    "property_probe",
    "read_latents",
    "sample_box",
    "score_batch",
    "search",
    "select_optimal",
    "shift_box",
    "write_latents",
]
