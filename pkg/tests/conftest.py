import numpy as np
import pytest
from PIL import Image

from ccgan import rng as rng_mod


@pytest.fixture
def rng():
    return rng_mod.stream(1234, "test")


def write_png(path, array_hwc):
    """Write an (h, w, c) uint8 array as PNG; c in {1, 3, 4}."""
    arr = np.asarray(array_hwc, dtype=np.uint8)
    mode = {1: "L", 3: "RGB", 4: "RGBA"}[arr.shape[2]]
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


@pytest.fixture
def image_dir(tmp_path):
    """Directory of small valid RGB PNGs, ids img000..img004."""
    d = tmp_path / "raw"
    d.mkdir()
    gen = rng_mod.stream(99, "fixture-images")
    for i in range(5):
        arr = gen.integers(0, 256, size=(12, 10, 3), dtype=np.uint8)
        write_png(d / f"img{i:03d}.png", arr)
    return d


def gaussian_blobs(rng, centers, n_per, sigma):
    """Stacked isotropic Gaussian clusters plus ground-truth labels."""
    xs, ys = [], []
    for lab, c in enumerate(centers):
        xs.append(rng.normal(0.0, sigma, size=(n_per, len(c))) + np.asarray(c))
        ys.extend([lab] * n_per)
    return np.vstack(xs), np.array(ys)
