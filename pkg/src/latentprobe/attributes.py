"""Averaged-exemplar attribute vectors and latent vector arithmetic.

An attribute direction is the difference between the averages of two
exemplar sets: latents whose renders show the attribute and latents whose
renders do not. Adding that difference to a found latent edits the attribute
while (empirically, and exactly on the synthetic backend under a sign
margin) preserving identity. Averaging several exemplars instead of using a
single pair is what keeps the direction stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import as_latent, as_latent_batch
from .errors import ConfigurationError, DimensionError
from .latentio import read_latents


@dataclass(frozen=True)
class AttributeRecipe:
    """Named pair of exemplar sets: attribute present vs attribute absent."""

    name: str
    positive_exemplars: np.ndarray
    negative_exemplars: np.ndarray

    def __post_init__(self):
        pos = as_latent_batch(self.positive_exemplars)
        neg = as_latent_batch(self.negative_exemplars)
        if pos.shape[0] == 0 or neg.shape[0] == 0:
            raise ConfigurationError(f"recipe {self.name!r} has an empty exemplar set")
        if pos.shape[1] != neg.shape[1]:
            raise DimensionError(
                f"recipe {self.name!r}: exemplar dimensions differ "
                f"({pos.shape[1]} vs {neg.shape[1]})"
            )
        object.__setattr__(self, "positive_exemplars", pos)
        object.__setattr__(self, "negative_exemplars", neg)

    @property
    def dim(self) -> int:
        return self.positive_exemplars.shape[1]

    def swapped(self) -> "AttributeRecipe":
        """The inverse recipe: positive and negative roles exchanged."""
        return AttributeRecipe(self.name, self.negative_exemplars, self.positive_exemplars)


def attribute_vector(exemplars) -> np.ndarray:
    """Coordinate-wise mean of the exemplars, at float32 grain.

    The mean is accumulated in float64 and rounded once to float32
    precision, the width at which latents are persisted and exchanged. For
    float32-grain exemplars of moderate exponent spread the difference of
    two such means is exact in float64, which is what makes edits exactly
    invertible.
    """
    batch = as_latent_batch(exemplars)
    if batch.shape[0] == 0:
        raise ConfigurationError("attribute_vector needs at least one exemplar")
    mean = batch.mean(axis=0)
    return mean.astype(np.float32).astype(np.float64)


def attribute_delta(recipe: AttributeRecipe) -> np.ndarray:
    """mean(positive) - mean(negative): the direction that adds the attribute."""
    return attribute_vector(recipe.positive_exemplars) - attribute_vector(
        recipe.negative_exemplars
    )


def apply_attribute(original, recipe: AttributeRecipe, direction: int = 1) -> np.ndarray:
    """original + mean(positive) - mean(negative), computed delta-first.

    ``direction`` +1 adds the attribute, -1 removes it (identical to
    applying the swapped recipe, bit for bit, because IEEE subtraction is
    antisymmetric). Applying an edit and then its inverse recovers the
    original exactly whenever original + delta is exact in float64 --
    guaranteed for float32-grain inputs of moderate exponent spread.
    """
    o = as_latent(original)
    if o.shape[0] != recipe.dim:
        raise DimensionError(
            f"latent length {o.shape[0]} does not match recipe dimension {recipe.dim}"
        )
    if direction not in (1, -1):
        raise ConfigurationError(f"direction must be +1 or -1, got {direction}")
    return o + direction * attribute_delta(recipe)


def generate_variants(
    base, recipes, directions, chain: bool = False
) -> list[np.ndarray]:
    """One edited latent per (recipe, direction) pair.

    Each edit is applied to ``base`` independently unless ``chain`` is set,
    in which case edits accumulate left to right.
    """
    recipes = list(recipes)
    directions = list(directions)
    if len(recipes) != len(directions):
        raise ConfigurationError(
            f"{len(recipes)} recipes but {len(directions)} directions"
        )
    base = as_latent(base)
    out: list[np.ndarray] = []
    current = base
    for recipe, direction in zip(recipes, directions):
        source = current if chain else base
        edited = apply_attribute(source, recipe, direction)
        out.append(edited)
        current = edited
    return out


def load_recipe(path) -> AttributeRecipe:
    """Load a recipe JSON {"name", "positive", "negative"} referencing latent files.

    Exemplar paths are resolved relative to the recipe file's directory.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid recipe JSON: {exc}") from exc
    for key in ("name", "positive", "negative"):
        if key not in doc:
            raise ConfigurationError(f"{path}: recipe JSON missing key {key!r}")
    base = path.parent
    return AttributeRecipe(
        name=str(doc["name"]),
        positive_exemplars=read_latents(base / doc["positive"]),
        negative_exemplars=read_latents(base / doc["negative"]),
    )
