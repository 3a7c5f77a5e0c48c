"""Self-attention over spatial positions.

Three 1x1 maps produce query/key/value planes; attention weights are a
row softmax of query-key inner products, and the attended values are added
back to the input scaled by a learned scalar that starts at zero, so the
layer is the identity at initialization.
"""

from __future__ import annotations

import numpy as np

from .layers import Conv2d, Layer, Param


class SelfAttention(Layer):
    def __init__(self, channels, rng, sn=False, dtype=np.float64):
        if channels < 1:
            raise ValueError("attention needs at least one channel")
        inner = max(1, channels // 8)
        self.f = Conv2d(channels, inner, 1, rng, bias=False, sn=sn, dtype=dtype)
        self.g = Conv2d(channels, inner, 1, rng, bias=False, sn=sn, dtype=dtype)
        self.h = Conv2d(channels, channels, 1, rng, bias=False, sn=sn, dtype=dtype)
        self.gamma = Param("gamma", np.zeros(1, dtype=dtype))

    def params(self):
        return self.f.params() + self.g.params() + self.h.params() + [self.gamma]

    def buffers(self):
        return self.f.buffers() + self.g.buffers() + self.h.buffers()

    def sublayers(self):
        return [("f", self.f), ("g", self.g), ("h", self.h)]

    def forward(self, x, train=True):
        n, hh, ww, c = x.shape
        p = hh * ww
        if p == 0:
            raise ValueError("attention over empty spatial extent")
        fx = self.f.forward(x, train).reshape(n, p, -1)  # (n, p, c8)
        gx = self.g.forward(x, train).reshape(n, p, -1)
        hx = self.h.forward(x, train).reshape(n, p, c)
        scores = np.matmul(fx, gx.transpose(0, 2, 1))  # (n, p_i, p_j)
        scores -= scores.max(axis=2, keepdims=True)
        expd = np.exp(scores)
        attn = expd / expd.sum(axis=2, keepdims=True)  # rows sum to 1
        attended = np.matmul(attn, hx)  # (n, p_i, c)
        self._cache = (x.shape, fx, gx, hx, attn, attended)
        return x + self.gamma.value[0] * attended.reshape(x.shape)

    def last_attention(self) -> np.ndarray:
        return self._cache[4]

    def backward(self, dout):
        shape, fx, gx, hx, attn, attended = self._cache
        n, hh, ww, c = shape
        p = hh * ww
        dout2 = dout.reshape(n, p, c)
        dattended = self.gamma.value[0] * dout2
        self.gamma.grad[0] += float(np.sum(dout2 * attended))

        dhx = np.matmul(attn.transpose(0, 2, 1), dattended)  # (n, p_j, c)
        dattn = np.matmul(dattended, hx.transpose(0, 2, 1))  # (n, p_i, p_j)
        # softmax rows: ds = a * (da - sum_j(da * a))
        inner = (dattn * attn).sum(axis=2, keepdims=True)
        dscores = attn * (dattn - inner)
        dfx = np.matmul(dscores, gx)  # (n, p_i, c8)
        dgx = np.matmul(dscores.transpose(0, 2, 1), fx)  # (n, p_j, c8)

        dx = dout.copy()
        dx += self.f.backward(dfx.reshape(n, hh, ww, -1))
        dx += self.g.backward(dgx.reshape(n, hh, ww, -1))
        dx += self.h.backward(dhx.reshape(n, hh, ww, c))
        return dx
