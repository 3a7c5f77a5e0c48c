"""Lazy witness filtrations over landmark subsets of a point cloud.

Landmarks are the vertices; every point of the cloud acts as a witness.
An edge (a, b) is born at the smallest alpha for which some witness w has
max(d(w,a), d(w,b)) <= alpha + m(w), where m(w) is the distance from w to
its nearest landmark (the lazy relaxation). Triangles appear when their
last edge does. Simplices born after alpha_max are dropped and the stream
is sorted by (birth, dimension).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Simplex:
    birth: float
    verts: tuple[int, ...]  # landmark indices, ascending

    @property
    def dim(self) -> int:
        return len(self.verts) - 1


@dataclass
class SimplexStream:
    simplices: list[Simplex] = field(default_factory=list)
    alpha_max: float = 0.0
    n_landmarks: int = 0

    def __len__(self):
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)


def landmark_distances(x: np.ndarray, landmarks: np.ndarray) -> np.ndarray:
    """(n_points, n_landmarks) Euclidean distances."""
    diff = x[:, None, :] - x[landmarks][None, :, :]
    return np.sqrt(np.einsum("nld,nld->nl", diff, diff))


def witness_filtration(
    x: np.ndarray, landmarks, alpha_max: float
) -> SimplexStream:
    """Build the lazy witness filtration up to dimension 2."""
    landmarks = np.asarray(landmarks, dtype=int)
    n_l = landmarks.size
    if n_l < 3:
        raise ValueError("need at least 3 landmarks")
    if np.unique(landmarks).size != n_l:
        raise ValueError("duplicate landmark indices")

    d = landmark_distances(x, landmarks)  # (n, L)
    m = d.min(axis=1)  # lazy relaxation per witness
    # edge birth = min over witnesses of (max of the two distances - m(w))
    pairwise = np.maximum(d[:, :, None], d[:, None, :])  # (n, L, L)
    births = np.maximum(pairwise - m[:, None, None], 0.0).min(axis=0)

    simplices = [Simplex(0.0, (int(i),)) for i in range(n_l)]
    edge_birth: dict[tuple[int, int], float] = {}
    for a in range(n_l):
        for b in range(a + 1, n_l):
            bab = float(births[a, b])
            if bab <= alpha_max:
                edge_birth[(a, b)] = bab
                simplices.append(Simplex(bab, (a, b)))
    # triangle birth = max of its edge births (lazy rule)
    adjacency: dict[int, set[int]] = {i: set() for i in range(n_l)}
    for a, b in edge_birth:
        adjacency[a].add(b)
    for a, b in sorted(edge_birth):
        for c in sorted(adjacency[a] & adjacency[b]):
            if c > b:
                t = max(edge_birth[(a, b)], edge_birth[(a, c)], edge_birth[(b, c)])
                simplices.append(Simplex(t, (a, b, c)))

    simplices.sort(key=lambda s: (s.birth, s.dim, s.verts))
    return SimplexStream(simplices=simplices, alpha_max=float(alpha_max),
                         n_landmarks=n_l)
