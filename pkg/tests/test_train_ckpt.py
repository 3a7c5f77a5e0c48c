import numpy as np
import pytest

from ccgan import rng as rng_mod
from ccgan.gan.checkpoint import (
    CheckpointFormatError,
    load_checkpoint,
    restore_networks,
    restore_optimizers,
    save_checkpoint,
    snapshot,
)
from ccgan.gan.config import GanConfig
from ccgan.gan.networks import build_networks
from ccgan.gan.sample import generate, generate_from_z, interpolate
from ccgan.gan.train import train_arrays


def toy_cfg(**kw):
    base = dict(
        img_h=8, img_w=8, base_channels=4, n_classes=3, z_dim=9,
        n_gen_blocks=2, batch_size=8, epochs=2, dtype="float32", seed=11,
    )
    base.update(kw)
    return GanConfig(**base)


def toy_data(cfg, n=48):
    gen = rng_mod.stream(7, "traindata")
    images = (gen.random((n, 3, cfg.img_h, cfg.img_w)) * 2 - 1).astype(np.float32)
    labels = np.arange(n) % cfg.n_classes
    return images, labels


class TestTrain:
    def test_zero_epochs_returns_initialization(self):
        cfg = toy_cfg(epochs=0)
        images, labels = toy_data(cfg)
        ckpt, stats = train_arrays(images, labels, cfg)
        assert stats == []
        g, _ = build_networks(cfg, rng_mod.stream(cfg.seed, "gan-init"))
        for name, p in g.parameters().items():
            assert np.allclose(ckpt.tensors[name], p.value.astype(np.float32))

    def test_iteration_accounting(self):
        cfg = toy_cfg(epochs=3, d_steps_per_g=2)
        images, labels = toy_data(cfg)
        ckpt, stats = train_arrays(images, labels, cfg)
        steps_per_epoch = len(images) // cfg.batch_size
        assert ckpt.iter_g == 3 * steps_per_epoch
        assert ckpt.iter_d == 2 * ckpt.iter_g

    def test_too_few_samples_rejected(self):
        cfg = toy_cfg(batch_size=64)
        images, labels = toy_data(cfg, n=20)
        with pytest.raises(ValueError, match="batch_size"):
            train_arrays(images, labels, cfg)

    def test_label_count_must_match(self):
        cfg = toy_cfg(n_classes=5)
        images, labels = toy_data(cfg)  # only 3 distinct labels
        labels = labels % 3
        with pytest.raises(ValueError, match="distinct"):
            train_arrays(images, labels, cfg)

    def test_deterministic_loss_log(self):
        cfg = toy_cfg(epochs=5)
        images, labels = toy_data(cfg)
        _, stats_a = train_arrays(images, labels, cfg)
        _, stats_b = train_arrays(images, labels, cfg)
        assert [s.loss_d for s in stats_a] == [s.loss_d for s in stats_b]
        assert [s.loss_g for s in stats_a] == [s.loss_g for s in stats_b]

    def test_metrics_csv_columns(self, tmp_path):
        cfg = toy_cfg(epochs=2)
        images, labels = toy_data(cfg)
        train_arrays(images, labels, cfg, metrics_path=tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().strip().splitlines()
        assert lines[0] == "epoch,iter_d,iter_g,loss_d,loss_g,ac_acc_real,ac_acc_fake"
        assert len(lines) == 3


class TestCheckpoint:
    def _trained(self, tmp_path):
        cfg = toy_cfg(epochs=1)
        images, labels = toy_data(cfg)
        ckpt, _ = train_arrays(images, labels, cfg)
        return ckpt

    def test_file_roundtrip_bit_exact(self, tmp_path):
        ckpt = self._trained(tmp_path)
        p1 = tmp_path / "a.bin"
        p2 = tmp_path / "b.bin"
        save_checkpoint(ckpt, p1)
        save_checkpoint(load_checkpoint(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_tensors_roundtrip_values(self, tmp_path):
        ckpt = self._trained(tmp_path)
        save_checkpoint(ckpt, tmp_path / "c.bin")
        back = load_checkpoint(tmp_path / "c.bin")
        assert set(back.tensors) == set(ckpt.tensors)
        for k, v in ckpt.tensors.items():
            assert np.array_equal(back.tensors[k], v)
        assert back.epoch == ckpt.epoch
        assert back.adam_t == ckpt.adam_t

    def test_empty_and_large_header_edges(self, tmp_path):
        cfg = toy_cfg()
        g, d = build_networks(cfg, rng_mod.stream(0, "x"))
        ck = snapshot(cfg, g, d)
        ck.tensors["weird/naéme" + "x" * 3000] = np.zeros((0, 4), dtype=np.float32)
        save_checkpoint(ck, tmp_path / "e.bin")
        back = load_checkpoint(tmp_path / "e.bin")
        assert back.tensors["weird/naéme" + "x" * 3000].shape == (0, 4)

    def test_truncated_rejected(self, tmp_path):
        ckpt = self._trained(tmp_path)
        save_checkpoint(ckpt, tmp_path / "t.bin")
        raw = (tmp_path / "t.bin").read_bytes()
        (tmp_path / "t.bin").write_bytes(raw[:-7])
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(tmp_path / "t.bin")

    def test_restore_continues_deterministically(self, tmp_path):
        ckpt = self._trained(tmp_path)
        g1, d1 = restore_networks(ckpt)
        g2, d2 = restore_networks(ckpt)
        restore_optimizers(ckpt, g1, d1)
        z = rng_mod.stream(4, "z").normal(size=(2, ckpt.config.z_dim))
        y = np.array([0, 1])
        assert np.array_equal(
            g1.forward(z, y, train=False), g2.forward(z, y, train=False)
        )


class TestSampling:
    def _ckpt(self):
        cfg = toy_cfg(epochs=1)
        images, labels = toy_data(cfg)
        ckpt, _ = train_arrays(images, labels, cfg)
        return ckpt

    def test_generate_shape_range_determinism(self):
        ckpt = self._ckpt()
        a = generate(ckpt, 1, 5, seed=42)
        b = generate(ckpt, 1, 5, seed=42)
        assert a.shape == (5, 3, 8, 8)
        assert a.min() >= 0.0 and a.max() <= 1.0
        assert np.array_equal(a, b)

    def test_interpolation_endpoints(self):
        ckpt = self._ckpt()
        gen = rng_mod.stream(9, "z")
        z0 = gen.normal(size=ckpt.config.z_dim)
        z1 = gen.normal(size=ckpt.config.z_dim)
        two = interpolate(ckpt, 2, z0, z1, steps=2)
        direct = generate_from_z(
            ckpt, np.stack([z0, z1]).astype(np.float32), 2
        )
        assert np.array_equal(two, direct)
        ten = interpolate(ckpt, 2, z0, z1, steps=10)
        assert ten.shape[0] == 10
        assert np.allclose(ten[0], two[0], atol=1e-6)
        assert np.allclose(ten[-1], two[-1], atol=1e-6)

    def test_steps_bound(self):
        ckpt = self._ckpt()
        with pytest.raises(ValueError):
            interpolate(ckpt, 0, np.zeros(9), np.ones(9), steps=1)
