"""Cluster-count estimation and dataset labeling.

X-means grows k from k_min by testing, per cluster, whether a local
2-means split improves the spherical BIC. The class count used downstream
is the mean of several independent X-means runs, rounded half-up. A second
stage can re-run the split test inside each first-stage cluster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .fmat import FeatureMatrix
from .kmeans import ClusterModel, bic, inertia_of, kmeanspp_seed, lloyd
from .manifest import Manifest, ManifestError


@dataclass
class ClusterConfig:
    k_min: int = 2
    k_max: int = 20
    xmeans_runs: int = 10
    lloyd_max_iter: int = 300
    lloyd_tol: float = 1e-6
    restarts: int = 10
    stages: int = 1
    seed: int = 0

    def validate(self) -> None:
        if not (2 <= self.k_min <= self.k_max):
            raise ValueError("need 2 <= k_min <= k_max")
        if min(self.xmeans_runs, self.lloyd_max_iter, self.restarts) < 1:
            raise ValueError("iteration counts must be positive")
        if self.stages not in (1, 2):
            raise ValueError("stages must be 1 or 2")


def _single_cluster_model(x: np.ndarray) -> ClusterModel:
    centroid = x.mean(axis=0, keepdims=True)
    labels = np.zeros(x.shape[0], dtype=int)
    return ClusterModel(
        k=1, centroids=centroid, assignments=labels,
        inertia=inertia_of(x, centroid, labels),
    )


SPLIT_RESTARTS = 5


def _split_improves(x: np.ndarray, rng: np.random.Generator, cfg: ClusterConfig):
    """Fit a local 2-means and return its centroids if BIC prefers the split.

    The child fit is the best of a few k-means++ restarts by BIC; a single
    seeding often misses the unbalanced splits the mixing-proportion term
    rewards.
    """
    if x.shape[0] < 3:  # BIC(k=2) needs n > 2
        return None
    best = None
    best_bic = -np.inf
    for _ in range(SPLIT_RESTARTS):
        child = lloyd(x, kmeanspp_seed(x, 2, rng), cfg.lloyd_max_iter, cfg.lloyd_tol)
        if child.k < 2:
            continue
        child_bic = bic(x, child)
        if child_bic > best_bic:
            best, best_bic = child, child_bic
    if best is not None and best_bic > bic(x, _single_cluster_model(x)):
        return best.centroids
    return None


def xmeans(
    x: np.ndarray,
    cfg: ClusterConfig,
    rng: np.random.Generator,
    k_start: int | None = None,
) -> ClusterModel:
    """Grow k from k_start (default cfg.k_min) by BIC-accepted splits.

    Each sweep tests every current cluster; accepted splits are applied
    together, followed by a global Lloyd pass. Stops when a sweep accepts
    nothing or k would exceed cfg.k_max.
    """
    k0 = cfg.k_min if k_start is None else k_start
    if x.shape[0] < k0:
        raise ValueError(f"need at least {k0} points, have {x.shape[0]}")
    if k0 == 1:
        model = _single_cluster_model(x)
    else:
        model = lloyd(x, kmeanspp_seed(x, k0, rng), cfg.lloyd_max_iter, cfg.lloyd_tol)

    while model.k < cfg.k_max:
        new_centroids = []
        accepted = 0
        budget = cfg.k_max - model.k
        for j in range(model.k):
            members = x[model.assignments == j]
            split = None
            if accepted < budget:
                split = _split_improves(members, rng, cfg)
            if split is None:
                new_centroids.append(model.centroids[j][None, :])
            else:
                new_centroids.append(split)
                accepted += 1
        if accepted == 0:
            break
        model = lloyd(
            x, np.vstack(new_centroids), cfg.lloyd_max_iter, cfg.lloyd_tol
        )
    model.bic = bic(x, model) if x.shape[0] > model.k else None
    return model


def average_class_count(ks: list[int]) -> int:
    """Arithmetic mean rounded half-up, in exact integer arithmetic."""
    if not ks:
        raise ValueError("no class counts to average")
    return (2 * sum(ks) + len(ks)) // (2 * len(ks))


def estimate_num_classes(x: np.ndarray, cfg: ClusterConfig, seed: int) -> int:
    """Mean k over cfg.xmeans_runs independent X-means runs, rounded half-up."""
    ks = [
        xmeans(x, cfg, rng_mod.stream(seed, "xmeans", i)).k
        for i in range(cfg.xmeans_runs)
    ]
    return average_class_count(ks)


def _best_fit(x: np.ndarray, k: int, cfg: ClusterConfig, seed: int) -> ClusterModel:
    """K-means++ plus Lloyd over cfg.restarts restarts, keeping the lowest
    inertia (ties toward the lowest restart index)."""
    best = None
    for r in range(cfg.restarts):
        gen = rng_mod.stream(seed, "fit", r)
        model = lloyd(x, kmeanspp_seed(x, k, gen), cfg.lloyd_max_iter, cfg.lloyd_tol)
        if best is None or model.inertia < best.inertia:
            best = model
    best.bic = bic(x, best) if x.shape[0] > best.k else None
    return best


def cluster_dataset(x: np.ndarray, cfg: ClusterConfig, seed: int) -> ClusterModel:
    """Estimate the class count, then fit that many clusters."""
    cfg.validate()
    k = estimate_num_classes(x, cfg, seed)
    k = min(max(k, cfg.k_min), cfg.k_max, x.shape[0])
    return _best_fit(x, k, cfg, seed)


def two_stage_cluster(x: np.ndarray, cfg: ClusterConfig, seed: int) -> np.ndarray:
    """Cluster, then re-run X-means inside each sufficiently large cluster.

    A second-stage X-means starts from a single cluster (so "no split" is a
    possible answer); when it finds k >= 2 sub-clusters, those replace the
    parent label. Final labels are renumbered densely in order of first
    appearance.
    """
    cfg.validate()
    stage1 = cluster_dataset(x, cfg, rng_mod.derive_seed(seed, "stage1"))
    labels = stage1.assignments.copy()
    next_label = stage1.k
    for j in range(stage1.k):
        member_idx = np.flatnonzero(labels == j)
        if member_idx.size < 2 * cfg.k_min:
            continue
        sub = xmeans(
            x[member_idx],
            cfg,
            rng_mod.stream(seed, "stage2", j),
            k_start=1,
        )
        if sub.k >= 2:
            for s in range(1, sub.k):
                labels[member_idx[sub.assignments == s]] = next_label
                next_label += 1
    return _renumber(labels)


def _renumber(labels: np.ndarray) -> np.ndarray:
    order: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        if lab not in order:
            order[int(lab)] = len(order)
        out[i] = order[int(lab)]
    return out


def features_matrix(fm: FeatureMatrix) -> np.ndarray:
    return fm.data.astype(np.float64)


def label_manifest(
    basic: Manifest, labels: np.ndarray | list[int], augmented: Manifest
) -> Manifest:
    """Attach per-original labels to every augmented record via source_id."""
    labels = list(labels)
    if not labels:
        raise ManifestError("empty label set")
    if len(labels) != len(basic):
        raise ManifestError(
            f"{len(labels)} labels for {len(basic)} basic records"
        )
    by_id = {rec.sample_id: int(lab) for rec, lab in zip(basic.records, labels)}
    mapping = {}
    for rec in augmented.records:
        if rec.source_id not in by_id:
            raise ManifestError(f"unknown source_id {rec.source_id!r}")
        mapping[rec.sample_id] = by_id[rec.source_id]
    out = augmented.with_labels(mapping)
    out.validate()
    return out
