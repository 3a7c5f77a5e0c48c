"""Feature providers: image -> vector mappings for clustering.

Four kinds:
  raw_rgb           flattened RGB pixels
  raw_edge          Sobel edge map, flattened
  random_projection flattened pixels through a seeded Gaussian matrix;
                    a deterministic, distance-preserving stand-in for
                    features from a pretrained network
  external          rows looked up by sample id in a feature file, for
                    genuine deep features computed outside the package
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .fmat import FeatureMatrix, import_features
from .images import to_edge
from .manifest import Manifest
from .pipeline import load_record_image

KINDS = ("raw_rgb", "raw_edge", "random_projection", "external")


@dataclass
class FeatureProvider:
    kind: str
    dim: int | None = None  # random_projection output width
    seed: int = 0
    path: str | Path | None = None  # external feature file
    matrix: np.ndarray | None = field(default=None, repr=False)  # projection override

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "random_projection" and self.dim is None and self.matrix is None:
            raise ValueError("random_projection needs an output dim")
        if self.kind == "external" and self.path is None:
            raise ValueError("external provider needs a feature file path")


def _projection_matrix(provider: FeatureProvider, in_dim: int) -> np.ndarray:
    if provider.matrix is not None:
        return np.asarray(provider.matrix, dtype=np.float64)
    gen = rng_mod.stream(provider.seed, "random_projection", in_dim, provider.dim)
    scale = 1.0 / np.sqrt(provider.dim)
    return gen.normal(0.0, scale, size=(in_dim, provider.dim))


def extract(
    manifest: Manifest, provider: FeatureProvider, image_store: str | Path
) -> FeatureMatrix:
    """Feature matrix for every manifest record, in manifest order."""
    ids = manifest.ids()
    if provider.kind == "external":
        table = import_features(provider.path)
        index = {s: i for i, s in enumerate(table.ids)}
        missing = [s for s in ids if s not in index]
        if missing:
            raise KeyError(f"external features missing ids: {missing[:5]}")
        rows = table.data[[index[s] for s in ids]]
        return FeatureMatrix(data=rows, ids=ids)

    flat_rows = []
    for rec in manifest.records:
        img = load_record_image(rec, image_store)
        if provider.kind == "raw_edge":
            img = to_edge(img)
        flat_rows.append(img.reshape(-1))
    widths = {r.shape[0] for r in flat_rows}
    if len(widths) > 1:
        raise ValueError(f"inconsistent feature widths across samples: {sorted(widths)}")
    x = np.stack(flat_rows) if flat_rows else np.zeros((0, 0))

    if provider.kind == "random_projection":
        proj = _projection_matrix(provider, x.shape[1])
        x = x @ proj
    return FeatureMatrix(data=x.astype(np.float32), ids=ids)


def standardize(fm: FeatureMatrix) -> FeatureMatrix:
    """Per-dimension z-score; constant dimensions are left at zero."""
    x = fm.data.astype(np.float64)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0] = 1.0
    return FeatureMatrix(data=((x - mean) / std).astype(np.float32), ids=list(fm.ids))
