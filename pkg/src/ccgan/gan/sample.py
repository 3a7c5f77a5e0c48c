"""Sampling from a trained checkpoint.

Evaluation-mode forward passes: batch norms use their running statistics
and spectral norms reuse the stored power-iteration vector, so outputs
depend only on (z, y, parameters).
"""

from __future__ import annotations

import numpy as np

from .. import rng as rng_mod
from .checkpoint import Checkpoint, restore_networks


def _to_unit(img: np.ndarray) -> np.ndarray:
    return np.clip((img + 1.0) * 0.5, 0.0, 1.0)


def generate_from_z(ckpt_or_gen, z: np.ndarray, y) -> np.ndarray:
    """Images in [0, 1] for explicit latents; y is an int or per-sample array."""
    g = ckpt_or_gen
    if isinstance(ckpt_or_gen, Checkpoint):
        g, _ = restore_networks(ckpt_or_gen)
    y = np.broadcast_to(np.asarray(y, dtype=np.int64), (z.shape[0],))
    return _to_unit(g.forward(z, y, train=False))


def generate(ckpt: Checkpoint, y, n: int, seed: int) -> np.ndarray:
    """n images of class y (int or length-n array), z ~ N(0, I)."""
    cfg = ckpt.config
    z = rng_mod.stream(seed, "generate").normal(size=(n, cfg.z_dim))
    z = z.astype(np.dtype(cfg.dtype).type)
    return generate_from_z(ckpt, z, y)


def interpolate(
    ckpt: Checkpoint, y: int, z0: np.ndarray, z1: np.ndarray, steps: int
) -> np.ndarray:
    """Linear latent blends (1-t) z0 + t z1 for t on a steps-point grid,
    class fixed; endpoints are exactly z0 and z1."""
    if steps < 2:
        raise ValueError("interpolation needs at least 2 steps")
    cfg = ckpt.config
    z0 = np.asarray(z0, dtype=np.dtype(cfg.dtype).type).reshape(-1)
    z1 = np.asarray(z1, dtype=np.dtype(cfg.dtype).type).reshape(-1)
    if z0.shape != (cfg.z_dim,) or z1.shape != (cfg.z_dim,):
        raise ValueError(f"latents must have length {cfg.z_dim}")
    ts = np.linspace(0.0, 1.0, steps, dtype=np.dtype(cfg.dtype).type)
    z = (1.0 - ts)[:, None] * z0[None, :] + ts[:, None] * z1[None, :]
    return generate_from_z(ckpt, z, y)
