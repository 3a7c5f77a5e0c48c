"""Image tensors and the operations applied to them.

An image tensor is a float64 array of shape (channels, height, width) with
values in [0, 1]; 3 channels for RGB, 1 for edge maps. Decoding goes through
Pillow; resizing and edge extraction are implemented here directly so the
sampling conventions are pinned down (bilinear with pixel-center alignment,
Sobel with replicate borders).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


class ImageFormatError(ValueError):
    """File is not a supported raster format."""


def check_image(img: np.ndarray) -> np.ndarray:
    if img.ndim != 3 or img.shape[0] not in (1, 3):
        raise ValueError(f"expected (1|3, h, w) tensor, got shape {img.shape}")
    if img.size and (img.min() < 0.0 or img.max() > 1.0):
        raise ValueError("image values out of [0, 1]")
    return img


def load_image(path: str | Path) -> np.ndarray:
    """Decode a raster file to an RGB tensor in [0, 1].

    Alpha, if present, is composited over a white background (source art
    routinely has transparent backgrounds).
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("RGBA", "LA", "PA") or (
                im.mode == "P" and "transparency" in im.info
            ):
                rgba = im.convert("RGBA")
                arr = np.asarray(rgba, dtype=np.float64) / 255.0
                rgb, alpha = arr[..., :3], arr[..., 3:4]
                arr = rgb * alpha + (1.0 - alpha)  # white backing
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path}: unsupported or corrupt image") from e
    except FileNotFoundError:
        raise
    except OSError as e:
        raise IOError(f"{path}: unreadable image ({e})") from e
    return check_image(np.ascontiguousarray(arr.transpose(2, 0, 1)))


def save_image(img: np.ndarray, path: str | Path) -> None:
    """Write a tensor as PNG (lossless)."""
    check_image(img)
    arr = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    if arr.shape[0] == 1:
        pil = Image.fromarray(arr[0], mode="L")
    else:
        pil = Image.fromarray(arr.transpose(1, 2, 0), mode="RGB")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pil.save(path, format="PNG")


def resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with the pixel-center convention.

    Destination pixel (i, j) samples the source at
    ((i + 0.5) * h_in / h_out - 0.5, (j + 0.5) * w_in / w_out - 0.5),
    with source taps clamped to the image border.
    """
    check_image(img)
    if out_h < 1 or out_w < 1:
        raise ValueError("target size must be at least 1x1")
    c, h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()

    src_y = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    src_x = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(src_y).astype(int)
    x0 = np.floor(src_x).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = src_y - y0
    wx = src_x - x0

    top = img[:, y0, :] * (1 - wy)[None, :, None] + img[:, y1, :] * wy[None, :, None]
    out = top[:, :, x0] * (1 - wx)[None, None, :] + top[:, :, x1] * wx[None, None, :]
    return np.clip(out, 0.0, 1.0)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luma grayscale (0.299 R + 0.587 G + 0.114 B), shape (h, w)."""
    check_image(img)
    if img.shape[0] != 3:
        raise ValueError("grayscale conversion expects a 3-channel image")
    return np.tensordot(LUMA_WEIGHTS, img, axes=([0], [0]))


def _conv3x3_replicate(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    xp = np.pad(x, 1, mode="edge")
    out = np.zeros_like(x)
    for di in range(3):
        for dj in range(3):
            out += kernel[di, dj] * xp[di : di + x.shape[0], dj : dj + x.shape[1]]
    return out


def to_edge(img: np.ndarray) -> np.ndarray:
    """Sobel edge magnitude of the luma image, normalized to [0, 1].

    Replicate border padding; a constant image maps to all zeros.
    """
    gray = to_gray(img)
    gx = _conv3x3_replicate(gray, SOBEL_X)
    gy = _conv3x3_replicate(gray, SOBEL_Y)
    mag = np.sqrt(gx * gx + gy * gy)
    peak = mag.max() if mag.size else 0.0
    if peak > 1e-12:  # below this is rounding noise from a constant image
        mag /= peak
    else:
        mag = np.zeros_like(mag)
    return mag[None, :, :]
