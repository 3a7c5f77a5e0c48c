"""Generator and discriminator assemblies.

The generator consumes the latent vector in equal chunks: chunk 0 feeds the
initial dense layer, chunk i+1 joins the class one-hot as the conditioning
input of block i. Self-attention sits after one block in each network, by
default where the feature map is a quarter of the output resolution. The
discriminator sum-pools its final feature map into phi, scores realness as
w.phi + b plus a class-embedding projection, and classifies phi with an
auxiliary linear head; all its weights are spectrally normalized.
"""

from __future__ import annotations

import numpy as np

from .attention import SelfAttention
from .blocks import DiscBlock, GenBlock
from .config import GanConfig
from .layers import BatchNorm, Conv2d, Dense, Embedding, Layer, Param, ReLU, Tanh


def _collect(named_layers) -> dict[str, Param]:
    out: dict[str, Param] = {}
    for prefix, layer in named_layers:
        for kind in ("params", "buffers"):
            for p in getattr(layer, kind)():
                name = f"{prefix}.{p.name}"
                if name in out:
                    raise ValueError(f"duplicate parameter name {name}")
                out[name] = p
    return out


def _flat_named(prefix: str, layer) -> list[tuple[str, Layer]]:
    if hasattr(layer, "sublayers"):
        named = [(f"{prefix}.{sub}", l) for sub, l in layer.sublayers()]
        # the block itself may still own direct params (e.g. attention gamma)
        return named + [(prefix, _DirectOnly(layer))]
    return [(prefix, layer)]


class _DirectOnly:
    """Adapter exposing only a composite layer's own scalar params."""

    def __init__(self, layer):
        self._layer = layer

    def params(self):
        nested = {id(p) for _, l in self._layer.sublayers() for p in l.params()}
        return [p for p in self._layer.params() if id(p) not in nested]

    def buffers(self):
        nested = {id(b) for _, l in self._layer.sublayers() for b in l.buffers()}
        return [b for b in self._layer.buffers() if id(b) not in nested]


class Generator:
    def __init__(self, cfg: GanConfig, rng: np.random.Generator):
        cfg.check()
        self.cfg = cfg
        dtype = np.dtype(cfg.dtype).type
        h0, w0 = cfg.base_hw
        chans = cfg.gen_channels()
        cond_dim = cfg.n_classes + cfg.z_chunk
        self.dense = Dense(cfg.z_chunk, chans[0][0] * h0 * w0, rng, dtype=dtype)
        self.blocks = [
            GenBlock(ci, co, cond_dim, rng, cfg.bn_momentum, dtype,
                     class_rows=cfg.n_classes, class_scale=cfg.class_init)
            for ci, co in chans
        ]
        self.attn = SelfAttention(chans[cfg.attn_position][1], rng, sn=False,
                                  dtype=dtype)
        self.bn_out = BatchNorm(chans[-1][1], cfg.bn_momentum, dtype)
        self.act_out = ReLU()
        self.conv_out = Conv2d(chans[-1][1], 3, 3, rng, dtype=dtype)
        self.conv_out.w.value *= dtype(cfg.out_conv_init)
        self.tanh = Tanh()
        self._dtype = dtype
        self._params = _collect(self.named_layers())

    def named_layers(self):
        named = [("g.dense", self.dense)]
        for i, blk in enumerate(self.blocks):
            named += _flat_named(f"g.block{i}", blk)
        named += _flat_named("g.attn", self.attn)
        named += [("g.bn_out", self.bn_out), ("g.conv_out", self.conv_out)]
        return named

    def parameters(self) -> dict[str, Param]:
        return self._params

    def zero_grads(self):
        for p in self._params.values():
            p.zero_grad()

    def forward(self, z, y, train=True):
        cfg = self.cfg
        n = z.shape[0]
        if z.shape[1] != cfg.z_dim:
            raise ValueError(f"z must have width {cfg.z_dim}")
        y = np.asarray(y)
        if y.min() < 0 or y.max() >= cfg.n_classes:
            raise ValueError("class index out of range")
        z = z.astype(self._dtype, copy=False)
        onehot = np.zeros((n, cfg.n_classes), dtype=self._dtype)
        onehot[np.arange(n), y] = 1.0
        chunks = np.split(z, cfg.n_gen_blocks + 1, axis=1)
        self._conds = [
            np.concatenate([onehot, chunks[i + 1]], axis=1)
            for i in range(cfg.n_gen_blocks)
        ]
        h0, w0 = cfg.base_hw
        x = self.dense.forward(chunks[0], train)
        x = x.reshape(n, h0, w0, -1)
        for i, blk in enumerate(self.blocks):
            x = blk.forward(x, self._conds[i], train)
            if i == cfg.attn_position:
                x = self.attn.forward(x, train)
        x = self.bn_out.forward(x, train)
        x = self.act_out.forward(x, train)
        x = self.conv_out.forward(x, train)
        out = self.tanh.forward(x, train)
        return out.transpose(0, 3, 1, 2)  # channels-first at the boundary

    def backward(self, dout):
        """Propagates into parameter grads; returns (dz, dcond list)."""
        cfg = self.cfg
        d = self.tanh.backward(dout.transpose(0, 2, 3, 1))
        d = self.conv_out.backward(d)
        d = self.act_out.backward(d)
        d = self.bn_out.backward(d)
        dconds = [None] * cfg.n_gen_blocks
        for i in range(cfg.n_gen_blocks - 1, -1, -1):
            if i == cfg.attn_position:
                d = self.attn.backward(d)
            d, dconds[i] = self.blocks[i].backward(d)
        dz0 = self.dense.backward(d.reshape(d.shape[0], -1))
        dz_chunks = [dz0] + [dc[:, cfg.n_classes :] for dc in dconds]
        return np.concatenate(dz_chunks, axis=1), dconds


class Discriminator:
    def __init__(self, cfg: GanConfig, rng: np.random.Generator):
        cfg.check()
        self.cfg = cfg
        dtype = np.dtype(cfg.dtype).type
        chans = cfg.disc_channels()
        self.blocks = [DiscBlock(ci, co, rng, sn=True, dtype=dtype)
                       for ci, co in chans]
        self.attn_index = min(
            max(cfg.n_gen_blocks - 2 - cfg.attn_position, 0), cfg.n_gen_blocks - 1
        )
        self.attn = SelfAttention(chans[self.attn_index][1], rng, sn=True,
                                  dtype=dtype)
        self.act_out = ReLU()
        phi_dim = chans[-1][1]
        self.head = Dense(phi_dim, 1, rng, sn=True, dtype=dtype)
        self.embed = Embedding(cfg.n_classes, phi_dim, rng, sn=True, dtype=dtype)
        self.ac_head = Dense(phi_dim, cfg.n_classes, rng, sn=True, dtype=dtype)
        self._dtype = dtype
        self._params = _collect(self.named_layers())

    def named_layers(self):
        named = []
        for i, blk in enumerate(self.blocks):
            named += _flat_named(f"d.block{i}", blk)
        named += _flat_named("d.attn", self.attn)
        named += [("d.head", self.head), ("d.embed", self.embed),
                  ("d.ac_head", self.ac_head)]
        return named

    def parameters(self) -> dict[str, Param]:
        return self._params

    def zero_grads(self):
        for p in self._params.values():
            p.zero_grad()

    def forward(self, x, y, train=True):
        cfg = self.cfg
        if x.shape[1:] != (3, cfg.img_h, cfg.img_w):
            raise ValueError(
                f"expected (n, 3, {cfg.img_h}, {cfg.img_w}) input, got {x.shape}"
            )
        x = x.astype(self._dtype, copy=False).transpose(0, 2, 3, 1)
        y = np.asarray(y)
        for i, blk in enumerate(self.blocks):
            x = blk.forward(x, train)
            if i == self.attn_index:
                x = self.attn.forward(x, train)
        x = self.act_out.forward(x, train)
        self._pool_shape = x.shape
        phi = x.sum(axis=(1, 2))
        self._phi = phi
        self._y = y
        w_phi = self.head.forward(phi, train)[:, 0]
        emb = self.embed.forward(y, train)
        self._emb = emb
        adv = w_phi + np.einsum("nd,nd->n", emb, phi)
        logits = self.ac_head.forward(phi, train)
        return adv, logits

    def backward(self, d_adv, d_logits):
        """Returns dx for the image input (channels-first)."""
        dphi = self.ac_head.backward(d_logits)
        self.embed.backward(d_adv[:, None] * self._phi)
        dphi = dphi + d_adv[:, None] * self._emb
        dphi = dphi + self.head.backward(d_adv[:, None])
        n, h, w, c = self._pool_shape
        d = np.broadcast_to(dphi[:, None, None, :], (n, h, w, c)).astype(
            dphi.dtype, copy=True
        )
        d = self.act_out.backward(d)
        for i in range(len(self.blocks) - 1, -1, -1):
            if i == self.attn_index:
                d = self.attn.backward(d)
            d = self.blocks[i].backward(d)
        return d.transpose(0, 3, 1, 2)


def build_networks(cfg: GanConfig, rng: np.random.Generator):
    return Generator(cfg, rng), Discriminator(cfg, rng)
