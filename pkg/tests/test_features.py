import numpy as np
import pytest

from ccgan import rng as rng_mod
from ccgan.features import FeatureProvider, extract, standardize
from ccgan.fmat import (
    FeatureMatrix,
    FmatFormatError,
    export_features,
    import_features,
)
from ccgan.images import save_image
from ccgan.manifest import Manifest, Record


def make_store(tmp_path, images):
    root = tmp_path / "store"
    records = []
    for name, img in images.items():
        save_image(img, root / f"images/{name}.png")
        records.append(Record(name, f"images/{name}.png", name))
    return Manifest(records), root


class TestFmat:
    def test_roundtrip_values(self, tmp_path):
        fm = FeatureMatrix(np.arange(1, 7, dtype=np.float32).reshape(2, 3), ["a", "b"])
        export_features(fm, tmp_path / "f.fmat")
        back = import_features(tmp_path / "f.fmat")
        assert back.ids == fm.ids
        assert np.array_equal(back.data, fm.data)

    def test_roundtrip_empty(self, tmp_path):
        fm = FeatureMatrix(np.zeros((0, 0), dtype=np.float32), [])
        export_features(fm, tmp_path / "e.fmat")
        back = import_features(tmp_path / "e.fmat")
        assert back.rows == 0 and back.cols == 0 and back.ids == []

    def test_file_is_bit_stable(self, tmp_path):
        gen = np.random.default_rng(0)
        fm = FeatureMatrix(gen.normal(size=(4, 9)).astype(np.float32),
                           [f"s{i}" for i in range(4)])
        export_features(fm, tmp_path / "a.fmat")
        export_features(import_features(tmp_path / "a.fmat"), tmp_path / "b.fmat")
        assert (tmp_path / "a.fmat").read_bytes() == (tmp_path / "b.fmat").read_bytes()

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.fmat"
        p.write_bytes(b"NOPE" + b"\x00" * 40)
        with pytest.raises(FmatFormatError, match="magic"):
            import_features(p)

    def test_truncated_payload(self, tmp_path):
        fm = FeatureMatrix(np.ones((3, 3), dtype=np.float32), ["a", "b", "c"])
        export_features(fm, tmp_path / "t.fmat")
        raw = (tmp_path / "t.fmat").read_bytes()
        (tmp_path / "t.fmat").write_bytes(raw[:-5])
        with pytest.raises(FmatFormatError, match="truncated"):
            import_features(tmp_path / "t.fmat")

    def test_unicode_ids(self, tmp_path):
        fm = FeatureMatrix(np.ones((2, 2), dtype=np.float32), ["ゆる-1", "キャラ/2"])
        export_features(fm, tmp_path / "u.fmat")
        assert import_features(tmp_path / "u.fmat").ids == fm.ids

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            FeatureMatrix(np.array([[np.nan]], dtype=np.float32), ["a"])


class TestExtract:
    def test_raw_rgb_flatten(self, tmp_path):
        m, root = make_store(tmp_path, {"a": np.full((3, 2, 2), 0.5)})
        fm = extract(m, FeatureProvider("raw_rgb"), root)
        assert fm.cols == 12
        assert np.allclose(fm.data[0], 0.5, atol=1 / 510)

    def test_identical_images_identical_rows(self, tmp_path):
        img = np.random.default_rng(0).random((3, 4, 4))
        m, root = make_store(tmp_path, {"a": img, "b": img})
        fm = extract(m, FeatureProvider("raw_rgb"), root)
        assert np.array_equal(fm.data[0], fm.data[1])

    def test_raw_edge_dims(self, tmp_path):
        m, root = make_store(tmp_path, {"a": np.random.default_rng(1).random((3, 4, 5))})
        fm = extract(m, FeatureProvider("raw_edge"), root)
        assert fm.cols == 20

    def test_projection_identity_override(self, tmp_path):
        img = np.random.default_rng(2).random((3, 2, 2))
        m, root = make_store(tmp_path, {"a": img})
        raw = extract(m, FeatureProvider("raw_rgb"), root)
        proj = extract(
            m, FeatureProvider("random_projection", matrix=np.eye(12)), root
        )
        assert np.array_equal(proj.data, raw.data)

    def test_projection_deterministic(self, tmp_path):
        m, root = make_store(tmp_path, {"a": np.random.default_rng(3).random((3, 3, 3))})
        p = FeatureProvider("random_projection", dim=5, seed=7)
        f1 = extract(m, p, root)
        f2 = extract(m, p, root)
        assert np.array_equal(f1.data, f2.data)

    def test_external_lookup_and_missing(self, tmp_path):
        m, root = make_store(tmp_path, {"a": np.zeros((3, 2, 2)), "b": np.ones((3, 2, 2))})
        table = FeatureMatrix(
            np.array([[1, 2], [3, 4], [5, 6]], dtype=np.float32), ["b", "z", "a"]
        )
        export_features(table, tmp_path / "ext.fmat")
        fm = extract(m, FeatureProvider("external", path=tmp_path / "ext.fmat"), root)
        assert np.array_equal(fm.data, [[5, 6], [1, 2]])  # manifest order a, b
        bad = Manifest(m.records + [Record("c", "images/c.png", "c")])
        with pytest.raises(KeyError):
            extract(bad, FeatureProvider("external", path=tmp_path / "ext.fmat"), root)

    def test_johnson_lindenstrauss_distortion(self):
        gen = rng_mod.stream(5, "jl")
        pts = gen.normal(size=(100, 512))
        proj = FeatureProvider("random_projection", dim=128, seed=3)
        from ccgan.features import _projection_matrix

        mat = _projection_matrix(proj, 512)
        low = pts @ mat
        idx = gen.integers(0, 100, size=(100, 2))
        idx = idx[idx[:, 0] != idx[:, 1]]
        d_hi = np.linalg.norm(pts[idx[:, 0]] - pts[idx[:, 1]], axis=1) ** 2
        d_lo = np.linalg.norm(low[idx[:, 0]] - low[idx[:, 1]], axis=1) ** 2
        distortion = np.abs(d_lo / d_hi - 1.0)
        assert np.median(distortion) < 0.25


class TestStandardize:
    def test_zscore(self):
        gen = np.random.default_rng(9)
        fm = FeatureMatrix(gen.normal(3.0, 2.0, size=(50, 4)).astype(np.float32),
                           [f"s{i}" for i in range(50)])
        z = standardize(fm)
        assert np.allclose(z.data.mean(axis=0), 0.0, atol=1e-5)
        assert np.allclose(z.data.std(axis=0), 1.0, atol=1e-5)

    def test_constant_dim_safe(self):
        fm = FeatureMatrix(np.ones((3, 2), dtype=np.float32), ["a", "b", "c"])
        z = standardize(fm)
        assert np.isfinite(z.data).all()
