"""K-means++ seeding, Lloyd refinement, and the spherical-Gaussian BIC.

Conventions pinned for reproducibility: squared Euclidean distance
everywhere, nearest-centroid ties broken toward the lowest index, empty
clusters repaired by reseeding to the point farthest from its assigned
centroid. Clusters that stay empty (possible only when the data has fewer
distinct points than k) are dropped from the returned model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    assignments: np.ndarray  # (n,) int
    inertia: float
    bic: float | None = None
    inertia_trace: list[float] = field(default_factory=list)


def squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances."""
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def assign(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest centroid per point; ties go to the lowest index (argmin)."""
    return np.argmin(squared_distances(x, centroids), axis=1)


def inertia_of(x: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    diff = x - centroids[labels]
    return float(np.einsum("nd,nd->", diff, diff))


def kmeanspp_seed(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding: each next centroid is sampled with probability
    proportional to its squared distance to the nearest chosen one."""
    n = x.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k={k} out of range for {n} points")
    chosen = [int(rng.integers(n))]
    d2 = np.einsum("nd,nd->n", x - x[chosen[0]], x - x[chosen[0]])
    while len(chosen) < k:
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = int(rng.choice(n, p=probs))
        else:
            # fewer distinct points than k: duplicates are unavoidable
            idx = int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, np.einsum("nd,nd->n", x - x[idx], x - x[idx]))
    return x[chosen].copy()


def _repair_empty(
    x: np.ndarray, centroids: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Reseed each empty cluster to the point currently farthest from its
    centroid (excluding points already used for repair this pass)."""
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    if (counts > 0).all():
        return labels
    dist = np.einsum("nd,nd->n", x - centroids[labels], x - centroids[labels])
    taken: set[int] = set()
    for j in np.flatnonzero(counts == 0):
        order = np.argsort(-dist, kind="stable")
        pick = next((int(i) for i in order if int(i) not in taken), None)
        if pick is None or dist[pick] == 0.0:
            continue  # nothing left to move; cluster stays empty
        centroids[j] = x[pick]
        labels = labels.copy()
        labels[pick] = j
        dist[pick] = 0.0
        taken.add(pick)
    return labels


def _drop_empty(centroids: np.ndarray, labels: np.ndarray):
    counts = np.bincount(labels, minlength=centroids.shape[0])
    keep = np.flatnonzero(counts > 0)
    if keep.size == centroids.shape[0]:
        return centroids, labels
    remap = np.full(centroids.shape[0], -1)
    remap[keep] = np.arange(keep.size)
    return centroids[keep], remap[labels]


def lloyd(
    x: np.ndarray,
    init_centroids: np.ndarray,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusterModel:
    """Alternate assignment/update until the relative inertia improvement
    drops below tol. Inertia is non-increasing across iterations."""
    centroids = np.array(init_centroids, dtype=np.float64, copy=True)
    labels = assign(x, centroids)
    labels = _repair_empty(x, centroids, labels)
    prev = inertia_of(x, centroids, labels)
    trace = [prev]
    for _ in range(max_iter):
        for j in range(centroids.shape[0]):
            members = x[labels == j]
            if members.shape[0]:
                centroids[j] = members.mean(axis=0)
        new_labels = assign(x, centroids)
        new_labels = _repair_empty(x, centroids, new_labels)
        stable = bool(np.array_equal(new_labels, labels))
        labels = new_labels
        cur = inertia_of(x, centroids, labels)
        trace.append(cur)
        if stable or prev == 0.0 or (prev - cur) / max(prev, 1e-300) < tol:
            prev = cur
            break
        prev = cur
    # Final assignment pass so the returned labels are exactly
    # nearest-centroid (repair can leave other points' labels stale).
    labels = assign(x, centroids)
    centroids, labels = _drop_empty(centroids, labels)
    return ClusterModel(
        k=centroids.shape[0],
        centroids=centroids,
        assignments=labels,
        inertia=inertia_of(x, centroids, labels),
        inertia_trace=trace,
    )


def bic(x: np.ndarray, model: ClusterModel) -> float:
    """Spherical-Gaussian BIC: hard-assignment log-likelihood with a pooled
    per-dimension variance, penalized by (p/2) log n with p = k (d + 1)
    free parameters. Higher is better."""
    n, d = x.shape
    k = model.k
    if n <= k:
        raise ValueError(f"BIC undefined for n={n} <= k={k}")
    sse = inertia_of(x, model.centroids, model.assignments)
    var = sse / (d * (n - k))
    var = max(var, np.finfo(np.float64).tiny)
    counts = np.bincount(model.assignments, minlength=k).astype(np.float64)
    counts = counts[counts > 0]
    loglik = (
        float(np.sum(counts * np.log(counts / n)))
        - 0.5 * n * d * math.log(2.0 * math.pi * var)
        - sse / (2.0 * var)
    )
    p = k * (d + 1)
    return loglik - 0.5 * p * math.log(n)
