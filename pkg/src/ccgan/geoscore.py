"""Topology comparison of point clouds via relative living times.

For one landmark draw, rlt measures the fraction of the filtration range
[0, alpha_max] spent with exactly i one-dimensional holes; mrlt averages
that over many independent draws. Two clouds are compared by the squared
error between their mrlt vectors: identical topology scores near zero,
and a mode-collapsed cloud drifts away from its training set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .fmat import FeatureMatrix
from .persistence import persistence_h1
from .witness import witness_filtration


@dataclass
class GsConfig:
    n_landmarks: int = 64
    gamma: float = 1.0 / 128.0
    i_max: int = 100
    n_repeats: int = 100
    seed: int = 0
    maxmin: bool = False  # landmark selection: uniform (default) or maxmin

    def validate(self) -> None:
        if self.n_landmarks < 3:
            raise ValueError("need at least 3 landmarks")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.i_max < 2:
            raise ValueError("i_max must be at least 2")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be positive")


def as_cloud(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        data = data.data
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("point cloud must be (n >= 2, d)")
    if not np.isfinite(x).all():
        raise ValueError("point cloud contains NaN/Inf")
    return x


def _maxmin_landmarks(x, k, rng) -> np.ndarray:
    chosen = [int(rng.integers(x.shape[0]))]
    d = np.linalg.norm(x - x[chosen[0]], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, np.linalg.norm(x - x[nxt], axis=1))
    return np.array(chosen)


def rlt(x, landmarks, cfg: GsConfig) -> np.ndarray:
    """Relative living time of i holes, i = 0..i_max-1, for one draw."""
    cfg.validate()
    x = as_cloud(x)
    landmarks = np.asarray(landmarks, dtype=int)
    lm_pts = x[landmarks]
    diff = lm_pts[:, None, :] - lm_pts[None, :, :]
    alpha_max = cfg.gamma * float(
        np.sqrt(np.einsum("abd,abd->ab", diff, diff)).max()
    )
    if alpha_max <= 0.0:
        raise ValueError("landmarks are all coincident; filtration is degenerate")

    stream = witness_filtration(x, landmarks, alpha_max)
    intervals = [
        (b, d) for b, d in persistence_h1(stream).intervals if d > b
    ]
    out = np.zeros(cfg.i_max)
    events = sorted(
        {0.0, alpha_max}
        | {b for b, _ in intervals if b < alpha_max}
        | {d for _, d in intervals if d < alpha_max}
    )
    for left, right in zip(events[:-1], events[1:]):
        beta = sum(1 for b, d in intervals if b <= left and d >= right)
        out[min(beta, cfg.i_max - 1)] += right - left
    out /= alpha_max
    out /= out.sum()  # exact partition of [0, alpha_max]
    return out


def mrlt(x, cfg: GsConfig) -> np.ndarray:
    """Mean rlt over cfg.n_repeats independent landmark draws."""
    cfg.validate()
    x = as_cloud(x)
    n = x.shape[0]
    if n < cfg.n_landmarks:
        raise ValueError(f"need at least {cfg.n_landmarks} points, have {n}")
    acc = np.zeros(cfg.i_max)
    for rep in range(cfg.n_repeats):
        gen = rng_mod.stream(cfg.seed, "mrlt", rep)
        if cfg.maxmin:
            landmarks = _maxmin_landmarks(x, cfg.n_landmarks, gen)
        else:
            landmarks = gen.choice(n, size=cfg.n_landmarks, replace=False)
        acc += rlt(x, landmarks, cfg)
    return acc / cfg.n_repeats


def geometry_score(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of squared differences between two mrlt vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"mrlt length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d)
