import numpy as np
import pytest

from ccgan import rng as rng_mod
from ccgan.augment import AugmentParams, apply_affine, apply_descriptor, augment_one


def disk_image(size=33, radius=10.0):
    ys, xs = np.mgrid[0:size, 0:size]
    c = (size - 1) / 2
    mask = (ys - c) ** 2 + (xs - c) ** 2 <= radius**2
    img = np.zeros((3, size, size))
    img[:, mask] = 1.0
    return img


def measured_radius(img):
    """Half-extent of the white blob along the horizontal center line."""
    size = img.shape[1]
    c = (size - 1) // 2
    row = img[0, c]
    on = np.flatnonzero(row > 0.5)
    # central run only (zoom-out adds a white border frame)
    run = [c]
    for j in range(c + 1, size):
        if j in on:
            run.append(j)
        else:
            break
    for j in range(c - 1, -1, -1):
        if j in on:
            run.append(j)
        else:
            break
    return (max(run) - min(run)) / 2


class TestApplyAffine:
    def test_identity_transform(self):
        gen = np.random.default_rng(3)
        img = gen.random((3, 9, 7))
        out = apply_affine(img, 0.0, 0.0, 0.0, 1.0)
        assert np.array_equal(out, img)

    def test_shift_moves_content(self):
        img = np.zeros((1, 8, 8))
        img[0, 4, 4] = 1.0
        out = apply_affine(img, 0.0, 0.25, 0.0, 1.0)  # right by 2 px
        assert out[0, 4, 6] == 1.0
        assert out[0, 4, 4] == 0.0

    def test_outside_fill_is_white(self):
        img = np.zeros((1, 8, 8))
        out = apply_affine(img, 0.0, 0.5, 0.0, 1.0)
        assert np.allclose(out[0, :, :4], 1.0)

    def test_zoom_shrinks_disk(self):
        img = disk_image()
        out = apply_affine(img, 0.0, 0.0, 0.0, 0.9)
        assert abs(measured_radius(out) - 0.9 * measured_radius(img)) <= 1.0

    def test_values_stay_in_range(self):
        gen = np.random.default_rng(4)
        img = gen.random((3, 12, 12))
        out = apply_affine(img, 7.0, 0.03, -0.02, 1.1)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestAugmentOne:
    def test_neutral_params_identity(self):
        gen = rng_mod.stream(7, "a")
        img = np.random.default_rng(0).random((3, 6, 6))
        p = AugmentParams(rotate_deg_max=0, shift_frac_max=0, zoom_min=1, zoom_max=1)
        out, desc = augment_one(img, p, gen)
        assert np.array_equal(out, img)
        assert desc["rotate_deg"] == 0.0 and desc["zoom"] == 1.0

    def test_descriptor_reproduces_image(self):
        gen = rng_mod.stream(8, "b")
        img = np.random.default_rng(1).random((3, 10, 10))
        out, desc = augment_one(img, AugmentParams(), gen)
        again = apply_descriptor(img, desc)
        assert np.array_equal(out, again)

    def test_same_stream_same_descriptors(self):
        img = np.random.default_rng(2).random((3, 5, 5))
        descs1 = [augment_one(img, AugmentParams(), rng_mod.stream(9, "c", i))[1] for i in range(4)]
        descs2 = [augment_one(img, AugmentParams(), rng_mod.stream(9, "c", i))[1] for i in range(4)]
        assert descs1 == descs2

    def test_param_validation(self):
        with pytest.raises(ValueError):
            AugmentParams(zoom_min=0.0).validate()
        with pytest.raises(ValueError):
            AugmentParams(factor=0).validate()
        with pytest.raises(ValueError):
            AugmentParams(shift_frac_max=1.0).validate()
