"""Neural-net layers with explicit forward/backward passes.

Every layer caches what its backward needs during forward, accumulates
parameter gradients into Param.grad, and returns the input gradient from
backward. No autodiff anywhere; correctness is established by the central
finite-difference harness in gradcheck.py.

Spectral normalization treats sigma as a constant within a step: backward
scales the weight gradient by 1/sigma and drops the rank-one term, matching
the one-power-iteration-per-step training semantics.
"""

from __future__ import annotations

import numpy as np

EPS_SN = 1e-12
EPS_BN = 1e-5


class Param:
    __slots__ = ("name", "value", "grad", "trainable")

    def __init__(self, name: str, value: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)
        self.trainable = trainable

    def zero_grad(self):
        self.grad[...] = 0.0


class Layer:
    def params(self) -> list[Param]:
        return []

    def buffers(self) -> list[Param]:
        """Non-trainable state that still belongs in a checkpoint."""
        return []

    def zero_grads(self):
        for p in self.params():
            p.zero_grad()


def l2normalize(v: np.ndarray) -> np.ndarray:
    return v / (np.linalg.norm(v) + EPS_SN)


def spectral_norm_apply(w: np.ndarray, u: np.ndarray, n_power_iter: int):
    """Power-iteration spectral normalization of a 2-D weight view.

    Returns (w / sigma, updated u, sigma); sigma is floored at a tiny
    epsilon so a zero matrix cannot divide by zero.
    """
    v = None
    for _ in range(n_power_iter):
        v = l2normalize(w.T @ u)
        u = l2normalize(w @ v)
    if v is None:
        v = l2normalize(w.T @ u)
    sigma = float(u @ w @ v)
    sigma = max(sigma, EPS_SN)
    return w / sigma, u, sigma


class _SpectralWeight:
    """Shared sigma bookkeeping for layers with a spectrally normalized weight."""

    def __init__(self, layer: Layer, rng: np.random.Generator, rows: int, dtype):
        self.u = Param(
            "u", l2normalize(rng.normal(size=rows)).astype(dtype), trainable=False
        )
        self.sigma = 1.0
        self.frozen = False  # gradcheck mode: reuse last sigma

    def normalize(self, w: np.ndarray, train: bool) -> np.ndarray:
        if self.frozen:
            return w / self.sigma
        mat = w.reshape(w.shape[0], -1)
        if train:
            w_sn, u_new, sigma = spectral_norm_apply(mat, self.u.value, 1)
            self.u.value = u_new.astype(w.dtype)
        else:
            v = l2normalize(mat.T @ self.u.value)
            sigma = max(float(self.u.value @ mat @ v), EPS_SN)
            w_sn = mat / sigma
        self.sigma = sigma
        return w_sn.reshape(w.shape)


class Dense(Layer):
    """y = x @ W.T + b with optional spectral normalization of W."""

    def __init__(self, in_dim, out_dim, rng, bias=True, sn=False, dtype=np.float64):
        scale = np.sqrt(2.0 / in_dim)
        self.w = Param("W", (rng.normal(size=(out_dim, in_dim)) * scale).astype(dtype))
        self.b = Param("b", np.zeros(out_dim, dtype=dtype)) if bias else None
        self.sn = _SpectralWeight(self, rng, out_dim, dtype) if sn else None
        self._x = None
        self._w_used = None

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])

    def buffers(self):
        return [self.sn.u] if self.sn is not None else []

    def forward(self, x, train=True):
        w = self.sn.normalize(self.w.value, train) if self.sn else self.w.value
        self._x, self._w_used = x, w
        out = x @ w.T
        if self.b is not None:
            out = out + self.b.value
        return out

    def backward(self, dout):
        dw = dout.T @ self._x
        if self.sn:
            dw /= self.sn.sigma
        self.w.grad += dw
        if self.b is not None:
            self.b.grad += dout.sum(axis=0)
        return dout @ self._w_used


def _pad2d(x, p):
    """Zero-pad the spatial axes of an (n, h, w, c) tensor."""
    n, h, w, c = x.shape
    out = np.zeros((n, h + 2 * p, w + 2 * p, c), dtype=x.dtype)
    out[:, p : p + h, p : p + w, :] = x
    return out


class Conv2d(Layer):
    """Stride-1 convolution on (n, h, w, c) tensors, kernel 1x1 or 3x3.

    Channels-last keeps the im2col copy contiguous in its inner dimension
    and lets the output GEMM land directly in layout, so each pass is a
    single large matrix product. The logical weight stays (out, in, k, k).
    """

    def __init__(self, in_ch, out_ch, ksize, rng, bias=True, sn=False,
                 dtype=np.float64):
        assert ksize in (1, 3)
        self.ksize = ksize
        self.pad = ksize // 2
        scale = np.sqrt(2.0 / (in_ch * ksize * ksize))
        self.w = Param(
            "W", (rng.normal(size=(out_ch, in_ch, ksize, ksize)) * scale).astype(dtype)
        )
        self.b = Param("b", np.zeros(out_ch, dtype=dtype)) if bias else None
        self.sn = _SpectralWeight(self, rng, out_ch, dtype) if sn else None
        self._x = None
        self._w_used = None

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])

    def buffers(self):
        return [self.sn.u] if self.sn is not None else []

    @staticmethod
    def _im2col(x, k, p):
        """(n*h*w, k*k*c) patch matrix; one contiguous copy."""
        n, h, w, c = x.shape
        xp = _pad2d(x, p)
        win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
        # (n, h, w, c, k, k) view -> (n, h, w, k, k, c) copy
        return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(
            n * h * w, k * k * c
        )

    def forward(self, x, train=True):
        w = self.sn.normalize(self.w.value, train) if self.sn else self.w.value
        n, h, wd, c = x.shape
        o = w.shape[0]
        self._w_used = w
        if self.ksize == 1:
            self._x2d = x.reshape(n * h * wd, c)
            out2d = self._x2d @ w.reshape(o, c).T
        else:
            cols = self._im2col(x, self.ksize, self.pad)
            self._cols = cols
            wmat = w.transpose(0, 2, 3, 1).reshape(o, -1)  # (o, k*k*c)
            out2d = cols @ wmat.T
        if self.b is not None:
            out2d = out2d + self.b.value[None, :]
        self._shape = (n, h, wd, c)
        return out2d.reshape(n, h, wd, o)

    def backward(self, dout):
        w = self._w_used
        n, h, wd, c = self._shape
        o = w.shape[0]
        k = self.ksize
        dout2d = dout.reshape(n * h * wd, o)
        if k == 1:
            dw = (dout2d.T @ self._x2d).reshape(self.w.value.shape)
            dx = (dout2d @ w.reshape(o, c)).reshape(n, h, wd, c)
        else:
            dw_okkc = (dout2d.T @ self._cols).reshape(o, k, k, c)
            dw = dw_okkc.transpose(0, 3, 1, 2)
            # dx = correlation of the padded output grad with the flipped kernel
            dcols = self._im2col(dout, k, self.pad)  # (nhw, k*k*o)
            wflip = np.ascontiguousarray(
                w[:, :, ::-1, ::-1].transpose(2, 3, 0, 1)
            ).reshape(k * k * o, c)
            dx = (dcols @ wflip).reshape(n, h, wd, c)
        if self.sn:
            dw = dw / self.sn.sigma
        self.w.grad += dw
        if self.b is not None:
            self.b.grad += dout2d.sum(axis=0)
        return dx


class Embedding(Layer):
    """Per-class vector table; rows indexed by integer labels."""

    def __init__(self, n_classes, dim, rng, scale=0.02, sn=False, dtype=np.float64):
        self.w = Param("W", (rng.normal(size=(n_classes, dim)) * scale).astype(dtype))
        self.sn = _SpectralWeight(self, rng, n_classes, dtype) if sn else None
        self._y = None

    def params(self):
        return [self.w]

    def buffers(self):
        return [self.sn.u] if self.sn is not None else []

    def forward(self, y, train=True):
        w = self.sn.normalize(self.w.value, train) if self.sn else self.w.value
        self._y = y
        return w[y]

    def backward(self, dout):
        dw = np.zeros_like(self.w.value)
        np.add.at(dw, self._y, dout)
        if self.sn:
            dw /= self.sn.sigma
        self.w.grad += dw
        return None  # integer input has no gradient


class ReLU(Layer):
    def forward(self, x, train=True):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class Tanh(Layer):
    def forward(self, x, train=True):
        self._out = np.tanh(x)
        return self._out

    def backward(self, dout):
        return dout * (1.0 - self._out * self._out)


class UpsampleNearest2x(Layer):
    def forward(self, x, train=True):
        return x.repeat(2, axis=1).repeat(2, axis=2)

    def backward(self, dout):
        n, h2, w2, c = dout.shape
        return dout.reshape(n, h2 // 2, 2, w2 // 2, 2, c).sum(axis=(2, 4))


class AvgPool2x(Layer):
    def forward(self, x, train=True):
        n, h, w, c = x.shape
        if h % 2 or w % 2:
            raise ValueError(f"odd spatial size {h}x{w} at a pooling block")
        return x.reshape(n, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))

    def backward(self, dout):
        return dout.repeat(2, axis=1).repeat(2, axis=2) / 4.0


def _bn_stats(x, running_mean, running_var, momentum, train):
    """Per-channel mean/std over (n, h, w) of an (n, h, w, c) tensor."""
    if train:
        m = x.shape[0] * x.shape[1] * x.shape[2]
        x2d = x.reshape(m, x.shape[3])
        mu = x2d.mean(axis=0)
        var = np.maximum(np.einsum("mc,mc->c", x2d, x2d) / m - mu * mu, 0.0)
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mu, var = running_mean, running_var
    sigma = np.sqrt(var + EPS_BN)
    xhat = (x - mu) / sigma
    return xhat, sigma


class _BatchNormCore(Layer):
    """Normalization core shared by the plain and conditional variants.

    Subclasses provide per-sample (n, c) gamma/beta in forward and receive
    their gradients back; this class owns the statistics and the input
    gradient. Tensors are (n, h, w, c)."""

    def __init__(self, channels, momentum=0.9, dtype=np.float64):
        self.channels = channels
        self.momentum = momentum
        self.running_mean = Param(
            "running_mean", np.zeros(channels, dtype=dtype), trainable=False
        )
        self.running_var = Param(
            "running_var", np.ones(channels, dtype=dtype), trainable=False
        )

    def buffers(self):
        return [self.running_mean, self.running_var]

    def _normalize(self, x, gamma_nc, beta_nc, train):
        xhat, sigma = _bn_stats(
            x, self.running_mean.value, self.running_var.value,
            self.momentum, train,
        )
        self._cache = (xhat, sigma, gamma_nc, train, x.shape)
        return gamma_nc[:, None, None, :] * xhat + beta_nc[:, None, None, :]

    def _backward_core(self, dout):
        """Returns (dx, dgamma_nc, dbeta_nc)."""
        xhat, sigma, gamma_nc, train, shape = self._cache
        n, h, w, c = shape
        dgamma_nc = np.einsum("nhwc,nhwc->nc", dout, xhat)
        dbeta_nc = dout.sum(axis=(1, 2))
        dxhat = dout * gamma_nc[:, None, None, :]
        if train:
            m = n * h * w
            s1 = dxhat.sum(axis=(0, 1, 2))
            s2 = np.einsum("nhwc,nhwc->c", dxhat, xhat)
            dx = (dxhat - (s1 + xhat * s2) / m) / sigma
        else:
            dx = dxhat / sigma
        return dx, dgamma_nc, dbeta_nc


class BatchNorm(_BatchNormCore):
    """Unconditional batch normalization with learned scale/offset."""

    def __init__(self, channels, momentum=0.9, dtype=np.float64):
        super().__init__(channels, momentum, dtype)
        self.gamma = Param("gamma", np.ones(channels, dtype=dtype))
        self.beta = Param("beta", np.zeros(channels, dtype=dtype))

    def params(self):
        return [self.gamma, self.beta]

    def forward(self, x, train=True):
        n = x.shape[0]
        ones = np.ones((n, 1), dtype=x.dtype)
        return self._normalize(
            x, ones * self.gamma.value[None, :], ones * self.beta.value[None, :], train
        )

    def backward(self, dout):
        dx, dgamma_nc, dbeta_nc = self._backward_core(dout)
        self.gamma.grad += dgamma_nc.sum(axis=0)
        self.beta.grad += dbeta_nc.sum(axis=0)
        return dx


class ClassCondBatchNorm(_BatchNormCore):
    """Batch norm whose scale/offset are looked up per class label."""

    def __init__(self, n_classes, channels, momentum=0.9, dtype=np.float64):
        super().__init__(channels, momentum, dtype)
        self.n_classes = n_classes
        self.gamma = Param("gamma", np.ones((n_classes, channels), dtype=dtype))
        self.beta = Param("beta", np.zeros((n_classes, channels), dtype=dtype))

    def params(self):
        return [self.gamma, self.beta]

    def forward(self, x, y, train=True):
        y = np.asarray(y)
        if y.min() < 0 or y.max() >= self.n_classes:
            raise ValueError("class index out of range")
        self._y = y
        return self._normalize(x, self.gamma.value[y], self.beta.value[y], train)

    def backward(self, dout):
        dx, dgamma_nc, dbeta_nc = self._backward_core(dout)
        np.add.at(self.gamma.grad, self._y, dgamma_nc)
        np.add.at(self.beta.grad, self._y, dbeta_nc)
        return dx


class VectorCondBatchNorm(_BatchNormCore):
    """Batch norm conditioned on a vector: gamma = 1 + cond @ Wg,
    beta = cond @ Wb. The conditioning vector carries the class one-hot
    concatenated with a latent chunk; the one-hot rows start with more
    weight than the latent rows so class identity is not drowned in latent
    noise at initialization."""

    def __init__(self, cond_dim, channels, rng=None, momentum=0.9,
                 dtype=np.float64, class_rows=None, class_scale=0.3,
                 latent_scale=0.05):
        super().__init__(channels, momentum, dtype)
        if rng is None:
            wg = np.zeros((cond_dim, channels))
            wb = np.zeros((cond_dim, channels))
        else:
            rows = cond_dim if class_rows is None else class_rows
            scales = np.full((cond_dim, 1), latent_scale)
            scales[:rows] = class_scale
            wg = rng.normal(0.0, 1.0, size=(cond_dim, channels)) * scales
            wb = rng.normal(0.0, 1.0, size=(cond_dim, channels)) * scales
        self.wg = Param("Wg", wg.astype(dtype))
        self.wb = Param("Wb", wb.astype(dtype))

    def params(self):
        return [self.wg, self.wb]

    def forward(self, x, cond, train=True):
        self._cond = cond
        gamma_nc = 1.0 + cond @ self.wg.value
        beta_nc = cond @ self.wb.value
        return self._normalize(x, gamma_nc, beta_nc, train)

    def backward(self, dout):
        dx, dgamma_nc, dbeta_nc = self._backward_core(dout)
        self.wg.grad += self._cond.T @ dgamma_nc
        self.wb.grad += self._cond.T @ dbeta_nc
        dcond = dgamma_nc @ self.wg.value.T + dbeta_nc @ self.wb.value.T
        return dx, dcond


def cond_batchnorm_forward(x, y, gamma, beta, eps=EPS_BN):
    """Functional class-conditional batch norm (batch statistics).

    gamma/beta are (n_classes, channels) tables; returns (out, cache) with
    the cached statistics needed by cond_batchnorm_backward."""
    y = np.asarray(y)
    if y.min() < 0 or y.max() >= gamma.shape[0]:
        raise ValueError("class index out of range")
    mu = x.mean(axis=(0, 2, 3))
    var = x.var(axis=(0, 2, 3))
    sigma = np.sqrt(var + eps)
    xhat = (x - mu[None, :, None, None]) / sigma[None, :, None, None]
    out = gamma[y][:, :, None, None] * xhat + beta[y][:, :, None, None]
    return out, (xhat, sigma, gamma, beta, y)


def cond_batchnorm_backward(dout, cache):
    """Gradients of the functional form: (dx, dgamma, dbeta)."""
    xhat, sigma, gamma, beta, y = cache
    n, c, h, w = dout.shape
    m = n * h * w
    dgamma_nc = (dout * xhat).sum(axis=(2, 3))
    dbeta_nc = dout.sum(axis=(2, 3))
    dgamma = np.zeros_like(gamma)
    dbeta = np.zeros_like(beta)
    np.add.at(dgamma, y, dgamma_nc)
    np.add.at(dbeta, y, dbeta_nc)
    dxhat = dout * gamma[y][:, :, None, None]
    s1 = dxhat.sum(axis=(0, 2, 3))
    s2 = (dxhat * xhat).sum(axis=(0, 2, 3))
    dx = (
        dxhat - (s1[None, :, None, None] + xhat * s2[None, :, None, None]) / m
    ) / sigma[None, :, None, None]
    return dx, dgamma, dbeta
