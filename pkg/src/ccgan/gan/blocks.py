"""Residual blocks for the generator and discriminator.

Generator block: conditional BN -> ReLU -> 2x nearest upsample -> 3x3 conv
-> conditional BN -> ReLU -> 3x3 conv, with an upsample + 1x1 conv skip;
both BNs are conditioned on the class one-hot concatenated with the
block's latent chunk. Discriminator block: ReLU -> 3x3 SN conv -> ReLU ->
3x3 SN conv -> 2x average pool, with a 1x1 SN conv + pool skip.
"""

from __future__ import annotations

import numpy as np

from .layers import (
    AvgPool2x,
    Conv2d,
    Layer,
    ReLU,
    UpsampleNearest2x,
    VectorCondBatchNorm,
)


class GenBlock(Layer):
    def __init__(self, in_ch, out_ch, cond_dim, rng, momentum=0.9,
                 dtype=np.float64, class_rows=None, class_scale=0.3):
        # convs feeding a BN (here or in the next block) skip their bias;
        # the normalization would absorb it anyway
        self.bn1 = VectorCondBatchNorm(cond_dim, in_ch, rng, momentum, dtype,
                                       class_rows=class_rows,
                                       class_scale=class_scale)
        self.act1 = ReLU()
        self.up = UpsampleNearest2x()
        self.conv1 = Conv2d(in_ch, out_ch, 3, rng, bias=False, dtype=dtype)
        self.bn2 = VectorCondBatchNorm(cond_dim, out_ch, rng, momentum, dtype,
                                       class_rows=class_rows,
                                       class_scale=class_scale)
        self.act2 = ReLU()
        self.conv2 = Conv2d(out_ch, out_ch, 3, rng, bias=False, dtype=dtype)
        self.up_skip = UpsampleNearest2x()
        self.conv_skip = Conv2d(in_ch, out_ch, 1, rng, bias=False, dtype=dtype)

    def sublayers(self):
        return [
            ("bn1", self.bn1), ("conv1", self.conv1), ("bn2", self.bn2),
            ("conv2", self.conv2), ("conv_skip", self.conv_skip),
        ]

    def params(self):
        return [p for _, l in self.sublayers() for p in l.params()]

    def buffers(self):
        return [b for _, l in self.sublayers() for b in l.buffers()]

    def forward(self, x, cond, train=True):
        r = self.bn1.forward(x, cond, train)
        r = self.act1.forward(r, train)
        r = self.up.forward(r, train)
        r = self.conv1.forward(r, train)
        r = self.bn2.forward(r, cond, train)
        r = self.act2.forward(r, train)
        r = self.conv2.forward(r, train)
        s = self.up_skip.forward(x, train)
        s = self.conv_skip.forward(s, train)
        return r + s

    def backward(self, dout):
        """Returns (dx, dcond)."""
        ds = self.conv_skip.backward(dout)
        dx = self.up_skip.backward(ds)
        dr = self.conv2.backward(dout)
        dr = self.act2.backward(dr)
        dr, dcond2 = self.bn2.backward(dr)
        dr = self.conv1.backward(dr)
        dr = self.up.backward(dr)
        dr = self.act1.backward(dr)
        dr, dcond1 = self.bn1.backward(dr)
        return dx + dr, dcond1 + dcond2


class DiscBlock(Layer):
    def __init__(self, in_ch, out_ch, rng, sn=True, dtype=np.float64):
        self.act1 = ReLU()
        self.conv1 = Conv2d(in_ch, out_ch, 3, rng, sn=sn, dtype=dtype)
        self.act2 = ReLU()
        self.conv2 = Conv2d(out_ch, out_ch, 3, rng, sn=sn, dtype=dtype)
        self.pool = AvgPool2x()
        self.conv_skip = Conv2d(in_ch, out_ch, 1, rng, sn=sn, dtype=dtype)
        self.pool_skip = AvgPool2x()

    def sublayers(self):
        return [("conv1", self.conv1), ("conv2", self.conv2),
                ("conv_skip", self.conv_skip)]

    def params(self):
        return [p for _, l in self.sublayers() for p in l.params()]

    def buffers(self):
        return [b for _, l in self.sublayers() for b in l.buffers()]

    def forward(self, x, train=True):
        r = self.act1.forward(x, train)
        r = self.conv1.forward(r, train)
        r = self.act2.forward(r, train)
        r = self.conv2.forward(r, train)
        r = self.pool.forward(r, train)
        s = self.conv_skip.forward(x, train)
        s = self.pool_skip.forward(s, train)
        return r + s

    def backward(self, dout):
        ds = self.pool_skip.backward(dout)
        dx = self.conv_skip.backward(ds)
        dr = self.pool.backward(dout)
        dr = self.conv2.backward(dr)
        dr = self.act2.backward(dr)
        dr = self.conv1.backward(dr)
        dr = self.act1.backward(dr)
        return dx + dr
