"""Label-preserving affine augmentation.

One sampled transform combines rotation, shift, and zoom into a single
inverse-mapped affine warp with bilinear sampling; pixels mapped from
outside the source are filled with white to match the composited
background. The sampled values are recorded in a descriptor so every
augmented image can be re-derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .images import check_image


@dataclass(frozen=True)
class AugmentParams:
    rotate_deg_max: float = 8.0
    shift_frac_max: float = 0.05
    zoom_min: float = 0.90
    zoom_max: float = 1.10
    factor: int = 5

    def validate(self) -> None:
        if self.rotate_deg_max < 0:
            raise ValueError("rotate_deg_max must be >= 0")
        if not (0 <= self.shift_frac_max < 1):
            raise ValueError("shift_frac_max must be in [0, 1)")
        if not (0 < self.zoom_min <= self.zoom_max):
            raise ValueError("need 0 < zoom_min <= zoom_max")
        if self.factor < 1:
            raise ValueError("factor must be >= 1")


def apply_affine(
    img: np.ndarray,
    rotate_deg: float,
    shift_x: float,
    shift_y: float,
    zoom: float,
    fill: float = 1.0,
) -> np.ndarray:
    """Warp by zoom+rotation about the image center, then shift.

    shift_x / shift_y are fractions of width / height. Sampling is bilinear;
    source taps outside the image contribute `fill`.
    """
    check_image(img)
    c, h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    theta = math.radians(rotate_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)

    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    # Invert: out = zoom * R(theta) @ (src - center) + center + t
    dx = xs - cx - shift_x * w
    dy = ys - cy - shift_y * h
    src_x = (cos_t * dx + sin_t * dy) / zoom + cx
    src_y = (-sin_t * dx + cos_t * dy) / zoom + cy

    x0 = np.floor(src_x).astype(int)
    y0 = np.floor(src_y).astype(int)
    fx = src_x - x0
    fy = src_y - y0

    out = np.empty_like(img)
    weights = ((1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx)
    taps = ((y0, x0), (y0, x0 + 1), (y0 + 1, x0), (y0 + 1, x0 + 1))
    for ch in range(c):
        acc = np.zeros((h, w))
        for (ty, tx), wgt in zip(taps, weights):
            inside = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
            vals = np.full((h, w), fill)
            vals[inside] = img[ch, ty[inside], tx[inside]]
            acc += wgt * vals
        out[ch] = acc
    return np.clip(out, 0.0, 1.0)


def sample_transform(p: AugmentParams, rng: np.random.Generator) -> dict:
    """Draw one transform descriptor (rotation, shifts, zoom all uniform)."""
    p.validate()
    return {
        "kind": "affine",
        "rotate_deg": float(rng.uniform(-p.rotate_deg_max, p.rotate_deg_max)),
        "shift_x": float(rng.uniform(-p.shift_frac_max, p.shift_frac_max)),
        "shift_y": float(rng.uniform(-p.shift_frac_max, p.shift_frac_max)),
        "zoom": float(rng.uniform(p.zoom_min, p.zoom_max)),
    }


def apply_descriptor(img: np.ndarray, desc: dict) -> np.ndarray:
    if desc == "identity":
        return img.copy()
    if desc.get("kind") != "affine":
        raise ValueError(f"unknown transform descriptor {desc!r}")
    return apply_affine(
        img, desc["rotate_deg"], desc["shift_x"], desc["shift_y"], desc["zoom"]
    )


def augment_one(
    img: np.ndarray, p: AugmentParams, rng: np.random.Generator
) -> tuple[np.ndarray, dict]:
    """Sample one transform and apply it; returns (image, descriptor)."""
    desc = sample_transform(p, rng)
    return apply_descriptor(img, desc), desc
