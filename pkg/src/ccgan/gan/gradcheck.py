"""Central finite-difference verification of every backward pass.

Each check builds a layer (or a whole network) in double precision, runs a
scalar loss through it (a fixed random projection of the output), and
compares analytic gradients against central differences for every
trainable parameter and for the layer inputs. Spectral-norm layers are
checked with sigma frozen, matching the constant-sigma backward.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rng_mod
from .attention import SelfAttention
from .blocks import DiscBlock, GenBlock
from .config import GanConfig
from .layers import (
    AvgPool2x,
    BatchNorm,
    ClassCondBatchNorm,
    Conv2d,
    Dense,
    Embedding,
    ReLU,
    Tanh,
    UpsampleNearest2x,
    VectorCondBatchNorm,
    cond_batchnorm_backward,
    cond_batchnorm_forward,
)
from .losses import hinge_d, hinge_g, softmax_cross_entropy
from .networks import build_networks

FD_STEP = 1e-5
TOL_DEFAULT = 1e-4
TOL_LINEAR = 1e-8


@dataclass
class LayerGradReport:
    layer: str
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Inf-norm difference normalized by the larger gradient scale."""
    scale = max(1.0, float(np.abs(analytic).max(initial=0.0)),
                float(np.abs(numeric).max(initial=0.0)))
    if analytic.size == 0:
        return 0.0
    return float(np.abs(analytic - numeric).max() / scale)


def central_diff(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    grad = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = f()
        flat[i] = orig - h
        down = f()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return grad


def _freeze_sigmas(layers):
    for layer in layers:
        sn = getattr(layer, "sn", None)
        if sn is not None:
            sn.frozen = True


def _check_unit(name, forward, backward, params, inputs, tol) -> LayerGradReport:
    """Generic parameter+input gradient check for one computational unit.

    forward() -> output array; backward(dout) -> tuple of input grads (or a
    single array); params: list of Param; inputs: list of float arrays that
    also receive gradients.
    """
    out0 = forward()
    proj = rng_mod.stream(1, "gradcheck-proj", name).normal(size=out0.shape)

    def loss():
        return float(np.sum(forward() * proj))

    for p in params:
        p.zero_grad()
    input_grads = backward(proj.copy())
    if not isinstance(input_grads, tuple):
        input_grads = (input_grads,)

    worst = 0.0
    for p in params:
        numeric = central_diff(loss, p.value)
        worst = max(worst, rel_error(p.grad, numeric))
    for analytic, x in zip(input_grads, inputs):
        if analytic is None:
            continue
        numeric = central_diff(loss, x)
        worst = max(worst, rel_error(analytic, numeric))
    return LayerGradReport(name, worst, tol)


def grad_check_all(cfg: GanConfig | None = None) -> list[LayerGradReport]:
    """Run the full battery on a tiny double-precision configuration."""
    if cfg is None:
        cfg = GanConfig(
            img_h=8, img_w=8, base_channels=4, n_classes=3, z_dim=9,
            n_gen_blocks=2, batch_size=2, dtype="float64", seed=0,
        )
    cfg.check()
    if cfg.dtype != "float64":
        raise ValueError("gradient checks require double precision")
    gen = rng_mod.stream(cfg.seed, "gradcheck")
    reports = []

    # dense
    layer = Dense(5, 4, gen, dtype=np.float64)
    x = gen.normal(size=(3, 5))
    reports.append(_check_unit(
        "dense", lambda: layer.forward(x), layer.backward,
        layer.params(), [x], TOL_LINEAR,
    ))

    # dense with spectral norm, sigma frozen
    layer = Dense(5, 4, gen, sn=True, dtype=np.float64)
    x = gen.normal(size=(3, 5))
    layer.forward(x)  # establish u and sigma
    _freeze_sigmas([layer])
    reports.append(_check_unit(
        "dense_sn", lambda: layer.forward(x), layer.backward,
        layer.params(), [x], TOL_LINEAR,
    ))

    # conv 3x3 and 1x1
    for k in (3, 1):
        layer = Conv2d(3, 4, k, gen, dtype=np.float64)
        x = gen.normal(size=(2, 5, 4, 3))
        reports.append(_check_unit(
            f"conv{k}x{k}", lambda: layer.forward(x), layer.backward,
            layer.params(), [x], TOL_LINEAR,
        ))

    # conv with spectral norm
    layer = Conv2d(3, 4, 3, gen, sn=True, dtype=np.float64)
    x = gen.normal(size=(2, 4, 4, 3))
    layer.forward(x)
    _freeze_sigmas([layer])
    reports.append(_check_unit(
        "conv3x3_sn", lambda: layer.forward(x), layer.backward,
        layer.params(), [x], TOL_LINEAR,
    ))

    # activations / resampling (input grads only)
    for name, layer, shape in (
        ("relu", ReLU(), (2, 4, 4, 3)),
        ("tanh", Tanh(), (2, 4, 4, 3)),
        ("upsample2x", UpsampleNearest2x(), (2, 3, 3, 3)),
        ("avgpool2x", AvgPool2x(), (2, 4, 4, 3)),
    ):
        x = gen.normal(size=shape)
        if name == "relu":
            x[np.abs(x) < 1e-3] += 0.1  # keep clear of the kink
        reports.append(_check_unit(
            name, lambda l=layer, xx=x: l.forward(xx), layer.backward, [], [x],
            TOL_DEFAULT,
        ))

    # batch norms
    y = np.array([0, 2, 1, 0])
    layer = BatchNorm(3, dtype=np.float64)
    x = gen.normal(size=(4, 3, 2, 3))
    reports.append(_check_unit(
        "batchnorm", lambda: layer.forward(x), layer.backward,
        layer.params(), [x], TOL_DEFAULT,
    ))

    layer = ClassCondBatchNorm(3, 3, dtype=np.float64)
    x = gen.normal(size=(4, 3, 2, 3))
    reports.append(_check_unit(
        "class_cond_batchnorm", lambda: layer.forward(x, y), layer.backward,
        layer.params(), [x], TOL_DEFAULT,
    ))

    # functional conditional batch norm
    gamma = 1.0 + 0.1 * gen.normal(size=(3, 3))
    beta = 0.1 * gen.normal(size=(3, 3))
    x = gen.normal(size=(4, 3, 3, 2))
    cache = {}

    def cbn_forward():
        out, c = cond_batchnorm_forward(x, y, gamma, beta)
        cache["c"] = c
        return out

    def cbn_backward(dout):
        return cond_batchnorm_backward(dout, cache["c"])  # (dx, dgamma, dbeta)

    out0 = cbn_forward()
    proj = rng_mod.stream(1, "gradcheck-proj", "cbn_fn").normal(size=out0.shape)
    dx, dgamma, dbeta = cbn_backward(proj.copy())
    worst = 0.0
    loss = lambda: float(np.sum(cbn_forward() * proj))
    for analytic, target in ((dx, x), (dgamma, gamma), (dbeta, beta)):
        worst = max(worst, rel_error(analytic, central_diff(loss, target)))
    reports.append(LayerGradReport("cond_batchnorm_fn", worst, TOL_DEFAULT))

    layer = VectorCondBatchNorm(4, 3, dtype=np.float64)
    layer.wg.value[:] = 0.2 * gen.normal(size=layer.wg.value.shape)
    layer.wb.value[:] = 0.2 * gen.normal(size=layer.wb.value.shape)
    x = gen.normal(size=(4, 3, 2, 3))
    cond = gen.normal(size=(4, 4))
    reports.append(_check_unit(
        "vector_cond_batchnorm", lambda: layer.forward(x, cond), layer.backward,
        layer.params(), [x, cond], TOL_DEFAULT,
    ))

    # self-attention (nonzero gamma so the attended path carries gradient)
    layer = SelfAttention(8, gen, dtype=np.float64)
    layer.gamma.value[0] = 0.7
    x = gen.normal(size=(2, 3, 3, 8))
    reports.append(_check_unit(
        "self_attention", lambda: layer.forward(x), layer.backward,
        layer.params(), [x], TOL_DEFAULT,
    ))

    # embedding (projection path exercised via a dot with a fixed feature)
    layer = Embedding(3, 6, gen, dtype=np.float64)
    phi = gen.normal(size=(4, 6))
    reports.append(_check_unit(
        "embedding", lambda: layer.forward(y), layer.backward,
        layer.params(), [], TOL_LINEAR,
    ))

    # generator block
    blk = GenBlock(4, 3, 5, gen, dtype=np.float64)
    for p in blk.params():  # nonzero conditioning weights
        if p.name in ("Wg", "Wb"):
            p.value[:] = 0.2 * gen.normal(size=p.value.shape)
    x = gen.normal(size=(2, 3, 3, 4))
    cond = gen.normal(size=(2, 5))
    reports.append(_check_unit(
        "gen_block", lambda: blk.forward(x, cond), blk.backward,
        blk.params(), [x, cond], TOL_DEFAULT,
    ))

    # discriminator block (frozen sigmas)
    blk = DiscBlock(3, 4, gen, dtype=np.float64)
    x = gen.normal(size=(2, 4, 4, 3))
    blk.forward(x)
    _freeze_sigmas([l for _, l in blk.sublayers()])
    reports.append(_check_unit(
        "disc_block", lambda: blk.forward(x), blk.backward,
        blk.params(), [x], TOL_DEFAULT,
    ))

    # losses
    r = gen.normal(size=6)
    f = gen.normal(size=6)
    r[np.abs(r - 1.0) < 1e-3] += 0.01  # keep away from hinge kinks
    f[np.abs(f + 1.0) < 1e-3] += 0.01
    _, d_real, d_fake = hinge_d(r, f)
    worst = max(
        rel_error(d_real, central_diff(lambda: hinge_d(r, f)[0], r)),
        rel_error(d_fake, central_diff(lambda: hinge_d(r, f)[0], f)),
        rel_error(hinge_g(f)[1], central_diff(lambda: hinge_g(f)[0], f)),
    )
    logits = gen.normal(size=(4, 3))
    yl = np.array([0, 2, 1, 1])
    _, dlogits = softmax_cross_entropy(logits, yl)
    worst = max(
        worst,
        rel_error(dlogits, central_diff(
            lambda: softmax_cross_entropy(logits, yl)[0], logits)),
    )
    reports.append(LayerGradReport("losses", worst, 1e-6))

    # full generator, full discriminator, and the composite G->D loss
    reports.extend(_check_networks(cfg))
    return reports


def _check_networks(cfg: GanConfig) -> list[LayerGradReport]:
    gen_rng = rng_mod.stream(cfg.seed, "gradcheck-nets")
    g, d = build_networks(cfg, gen_rng)
    n = 2
    z = gen_rng.normal(size=(n, cfg.z_dim))
    y = np.arange(n) % cfg.n_classes
    x_img = np.tanh(gen_rng.normal(size=(n, 3, cfg.img_h, cfg.img_w)))

    # give the zero-initialized conditioning/attention paths real weight, and
    # nudge biases so no pre-activation sits exactly on a ReLU kink (the
    # check must run at a point where the loss is differentiable)
    for p in list(g.parameters().values()) + list(d.parameters().values()):
        if p.trainable and p.name in ("Wg", "Wb", "gamma", "b", "beta"):
            flat = p.value.reshape(-1)
            flat += 0.2 * gen_rng.normal(size=flat.size)

    reports = []

    # discriminator alone (freeze sigmas after one forward)
    d.forward(x_img, y)
    for _, layer in d.named_layers():
        _freeze_sigmas([layer])
    proj_a = rng_mod.stream(1, "gradcheck-proj", "d-adv").normal(size=n)
    proj_l = rng_mod.stream(1, "gradcheck-proj", "d-log").normal(
        size=(n, cfg.n_classes))

    def d_loss():
        adv, logits = d.forward(x_img, y)
        return float(np.sum(adv * proj_a) + np.sum(logits * proj_l))

    d.zero_grads()
    adv, logits = d.forward(x_img, y)
    dx = d.backward(proj_a.copy(), proj_l.copy())
    worst = rel_error(dx, central_diff(d_loss, x_img))
    for p in d.parameters().values():
        if p.trainable:
            worst = max(worst, rel_error(p.grad, central_diff(d_loss, p.value)))
    reports.append(LayerGradReport("discriminator", worst, TOL_DEFAULT))

    # generator alone
    proj_g = rng_mod.stream(1, "gradcheck-proj", "g-out").normal(
        size=(n, 3, cfg.img_h, cfg.img_w))

    def g_loss():
        return float(np.sum(g.forward(z, y) * proj_g))

    g.zero_grads()
    g.forward(z, y)
    dz, _ = g.backward(proj_g.copy())
    worst = rel_error(dz, central_diff(g_loss, z))
    for p in g.parameters().values():
        if p.trainable:
            worst = max(worst, rel_error(p.grad, central_diff(g_loss, p.value)))
    reports.append(LayerGradReport("generator", worst, TOL_DEFAULT))

    # composite: hinge-G + AC loss of D(G(z, y)) w.r.t. generator parameters
    def composite_loss():
        fake = g.forward(z, y)
        adv, logits = d.forward(fake, y)
        g_adv, _ = hinge_g(adv)
        ce, _ = softmax_cross_entropy(logits, y)
        return g_adv + ce

    g.zero_grads()
    d.zero_grads()
    fake = g.forward(z, y)
    adv, logits = d.forward(fake, y)
    _, d_fake = hinge_g(adv)
    _, d_logits = softmax_cross_entropy(logits, y)
    dimg = d.backward(d_fake, d_logits)
    g.backward(dimg)
    worst = 0.0
    for p in g.parameters().values():
        if p.trainable:
            worst = max(worst, rel_error(p.grad, central_diff(
                composite_loss, p.value)))
    reports.append(LayerGradReport("composite_g_through_d", worst, TOL_DEFAULT))
    return reports
