"""The adversarial training loop.

Per generator update the discriminator takes d_steps_per_g updates, each on
a fresh batch from its own shuffled stream, so one epoch advances the
generator once per dataset batch and the discriminator d_steps_per_g times
as often. The discriminator learns much faster than the generator by
construction (two time scales); fakes for D updates reuse the real batch's
labels, fakes for G updates draw labels from the empirical distribution.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import rng as rng_mod
from ..images import load_image, resize
from ..manifest import Manifest
from .adam import Adam
from .checkpoint import Checkpoint, save_checkpoint, snapshot
from .config import GanConfig
from .losses import (
    accuracy,
    hinge_d_fake,
    hinge_d_real,
    hinge_g,
    softmax_cross_entropy,
)
from .networks import build_networks

METRIC_COLUMNS = (
    "epoch", "iter_d", "iter_g", "loss_d", "loss_g", "ac_acc_real", "ac_acc_fake",
)


@dataclass
class EpochStats:
    epoch: int
    iter_d: int
    iter_g: int
    loss_d: float
    loss_g: float
    ac_acc_real: float
    ac_acc_fake: float
    sigma_d_mean: float

    def row(self) -> list:
        return [
            self.epoch, self.iter_d, self.iter_g,
            f"{self.loss_d:.6f}", f"{self.loss_g:.6f}",
            f"{self.ac_acc_real:.4f}", f"{self.ac_acc_fake:.4f}",
        ]


class _BatchStream:
    """Endless stream of shuffled index batches (remainders dropped)."""

    def __init__(self, n, batch, rng):
        self.n, self.batch, self.rng = n, batch, rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next(self):
        if self._pos + self.batch > self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        out = self._order[self._pos : self._pos + self.batch]
        self._pos += self.batch
        return out


def load_training_arrays(manifest: Manifest, image_root, cfg: GanConfig):
    """Images in [-1, 1] plus integer labels, resized to the working size."""
    dtype = np.dtype(cfg.dtype).type
    images = np.empty((len(manifest), 3, cfg.img_h, cfg.img_w), dtype=dtype)
    for i, rec in enumerate(manifest.records):
        img = load_image(Path(image_root) / rec.path)
        if img.shape[1:] != (cfg.img_h, cfg.img_w):
            img = resize(img, cfg.img_h, cfg.img_w)
        images[i] = img * 2.0 - 1.0
    labels = np.asarray(manifest.labels(), dtype=np.int64)
    return images, labels


def _mean_sigma(d) -> float:
    sigmas = []
    for _, layer in d.named_layers():
        sn = getattr(layer, "sn", None)
        if sn is not None:
            sigmas.append(sn.sigma)
    return float(np.mean(sigmas)) if sigmas else 0.0


def train_arrays(
    images: np.ndarray,
    labels: np.ndarray,
    cfg: GanConfig,
    out_dir: str | Path | None = None,
    ckpt_interval: int = 0,
    metrics_path: str | Path | None = None,
) -> tuple[Checkpoint, list[EpochStats]]:
    """Train on in-memory arrays; images are expected in [-1, 1]."""
    cfg.check()
    n = images.shape[0]
    if n < cfg.batch_size:
        raise ValueError(f"need at least batch_size={cfg.batch_size} samples, have {n}")
    distinct = np.unique(labels)
    if distinct.size != cfg.n_classes:
        raise ValueError(
            f"manifest has {distinct.size} distinct labels, config says "
            f"{cfg.n_classes} classes"
        )
    if labels.min() < 0 or labels.max() >= cfg.n_classes:
        raise ValueError("labels must lie in [0, n_classes)")

    g, d = build_networks(cfg, rng_mod.stream(cfg.seed, "gan-init"))
    opt_g = Adam(g.parameters(), cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2)
    opt_d = Adam(d.parameters(), cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2)
    loop_rng = rng_mod.stream(cfg.seed, "train-loop")
    dtype = np.dtype(cfg.dtype).type

    g_stream = _BatchStream(n, cfg.batch_size, rng_mod.stream(cfg.seed, "g-batches"))
    d_stream = _BatchStream(n, cfg.batch_size, rng_mod.stream(cfg.seed, "d-batches"))

    def _label_pool():
        pool_rng = rng_mod.stream(cfg.seed, "g-labels")
        base = np.sort(np.unique(labels))
        while True:
            block = np.repeat(base, max(1, cfg.batch_size // base.size))
            yield from pool_rng.permutation(block)

    label_pool = _label_pool()

    writer = None
    metrics_file = None
    if metrics_path is not None:
        metrics_path = Path(metrics_path)
        metrics_path.parent.mkdir(parents=True, exist_ok=True)
        metrics_file = open(metrics_path, "w", newline="")
        writer = csv.writer(metrics_file)
        writer.writerow(METRIC_COLUMNS)

    iter_d = iter_g = 0
    stats: list[EpochStats] = []
    steps_per_epoch = n // cfg.batch_size
    try:
        for epoch in range(cfg.epochs):
            agg = {"loss_d": 0.0, "loss_g": 0.0, "acc_r": 0.0, "acc_f": 0.0}
            for _ in range(steps_per_epoch):
                d_loss_acc = acc_r = acc_f = 0.0
                b = cfg.batch_size
                idxs = [d_stream.next() for _ in range(cfg.d_steps_per_g)]
                y_all = np.concatenate([labels[i] for i in idxs])
                z = loop_rng.normal(
                    size=(cfg.d_steps_per_g * b, cfg.z_dim)
                ).astype(dtype)
                fakes = g.forward(z, y_all, train=True)
                for s in range(cfg.d_steps_per_g):
                    real, y = images[idxs[s]], labels[idxs[s]]
                    fake = fakes[s * b : (s + 1) * b]

                    # one D pass over real and fake stacked; D has no batch
                    # norm, so per-sample outputs are unaffected by stacking
                    both = np.concatenate([real, fake], axis=0)
                    y2 = np.concatenate([y, y])
                    d.zero_grads()
                    adv, logits = d.forward(both, y2, train=True)
                    adv_r, adv_f = adv[:b], adv[b:]
                    logits_r, logits_f = logits[:b], logits[b:]
                    hinge_r, d_real_grad = hinge_d_real(adv_r)
                    hinge_f, d_fake_grad = hinge_d_fake(adv_f)
                    ce_r, dlog_r = softmax_cross_entropy(logits_r, y)
                    ce_f, dlog_f = softmax_cross_entropy(logits_f, y)
                    d_adv_grad = np.concatenate([d_real_grad, d_fake_grad])
                    dlog = np.concatenate([
                        cfg.lambda_ac * dlog_r,
                        cfg.lambda_ac * dlog_f if cfg.ac_fake_in_d
                        else np.zeros_like(dlog_f),
                    ])
                    d.backward(d_adv_grad, dlog)
                    opt_d.step()
                    iter_d += 1

                    loss_d = (
                        hinge_r + hinge_f + cfg.lambda_ac * ce_r
                        + (cfg.lambda_ac * ce_f if cfg.ac_fake_in_d else 0.0)
                    )
                    d_loss_acc += loss_d
                    acc_r += accuracy(logits_r, y)
                    acc_f += accuracy(logits_f, y)

                # generator update; labels cycle through a shuffled pool so
                # every class receives equally many generator gradients
                z = loop_rng.normal(size=(cfg.batch_size, cfg.z_dim)).astype(dtype)
                y_g = np.array([next(label_pool) for _ in range(cfg.batch_size)])
                g.zero_grads()
                fake = g.forward(z, y_g, train=True)
                adv_f, logits_f = d.forward(fake, y_g, train=False)
                g_adv, d_adv_grad = hinge_g(adv_f)
                ce_f, dlog_f = softmax_cross_entropy(logits_f, y_g)
                d.zero_grads()  # D is a fixed function here
                dimg = d.backward(d_adv_grad, cfg.lambda_ac * dlog_f)
                d.zero_grads()
                g.backward(dimg)
                opt_g.step()
                iter_g += 1
                loss_g = g_adv + cfg.lambda_ac * ce_f

                agg["loss_d"] += d_loss_acc / cfg.d_steps_per_g
                agg["loss_g"] += loss_g
                agg["acc_r"] += acc_r / cfg.d_steps_per_g
                agg["acc_f"] += acc_f / cfg.d_steps_per_g

            k = max(steps_per_epoch, 1)
            st = EpochStats(
                epoch=epoch + 1,
                iter_d=iter_d,
                iter_g=iter_g,
                loss_d=agg["loss_d"] / k,
                loss_g=agg["loss_g"] / k,
                ac_acc_real=agg["acc_r"] / k,
                ac_acc_fake=agg["acc_f"] / k,
                sigma_d_mean=_mean_sigma(d),
            )
            stats.append(st)
            if writer is not None:
                writer.writerow(st.row())
                metrics_file.flush()
            if (
                out_dir is not None
                and ckpt_interval > 0
                and (epoch + 1) % ckpt_interval == 0
            ):
                ck = snapshot(cfg, g, d, opt_g, opt_d, epoch + 1, iter_d, iter_g,
                              loop_rng)
                save_checkpoint(ck, Path(out_dir) / f"ckpt_epoch{epoch + 1:05d}.bin")
    finally:
        if metrics_file is not None:
            metrics_file.close()

    final = snapshot(cfg, g, d, opt_g, opt_d, cfg.epochs, iter_d, iter_g, loop_rng)
    if out_dir is not None:
        save_checkpoint(final, Path(out_dir) / "ckpt_final.bin")
    return final, stats


def train(
    manifest: Manifest,
    image_root,
    cfg: GanConfig,
    out_dir=None,
    ckpt_interval: int = 0,
    metrics_path=None,
) -> tuple[Checkpoint, list[EpochStats]]:
    """Train from a labeled manifest; see train_arrays for the contract."""
    images, labels = load_training_arrays(manifest, image_root, cfg)
    return train_arrays(images, labels, cfg, out_dir, ckpt_interval, metrics_path)
