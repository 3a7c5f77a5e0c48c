"""Hinge adversarial losses plus auxiliary-classifier cross entropy.

Every function returns its value together with the gradients needed by the
training loop, so the loss layer composes with the hand-written backward
passes of the networks.
"""

from __future__ import annotations

import numpy as np


def hinge_d_real(real_out: np.ndarray):
    """relu(1 - D(real)) averaged, with its gradient."""
    n = real_out.shape[0]
    loss = float(np.maximum(0.0, 1.0 - real_out).mean())
    grad = -(real_out < 1.0).astype(real_out.dtype) / n
    return loss, grad


def hinge_d_fake(fake_out: np.ndarray):
    """relu(1 + D(fake)) averaged, with its gradient."""
    n = fake_out.shape[0]
    loss = float(np.maximum(0.0, 1.0 + fake_out).mean())
    grad = (fake_out > -1.0).astype(fake_out.dtype) / n
    return loss, grad


def hinge_d(real_out: np.ndarray, fake_out: np.ndarray):
    """Discriminator hinge loss and (d_real, d_fake) gradients."""
    loss_r, d_real = hinge_d_real(real_out)
    loss_f, d_fake = hinge_d_fake(fake_out)
    return loss_r + loss_f, d_real, d_fake


def hinge_g(fake_out: np.ndarray):
    """Generator adversarial loss -mean(D(fake)) and its gradient."""
    n = fake_out.shape[0]
    loss = float(-fake_out.mean())
    d_fake = np.full_like(fake_out, -1.0 / n)
    return loss, d_fake


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray):
    """Mean cross entropy over the batch and the logits gradient."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    probs = expd / expd.sum(axis=1, keepdims=True)
    picked = probs[np.arange(n), y]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    grad = probs.copy()
    grad[np.arange(n), y] -= 1.0
    return loss, grad / n


def accuracy(logits: np.ndarray, y: np.ndarray) -> float:
    if logits.shape[0] == 0:
        return 0.0
    return float((logits.argmax(axis=1) == np.asarray(y)).mean())


def losses(
    real_out,
    fake_out,
    class_logits_real,
    class_logits_fake,
    y,
    lambda_ac: float = 1.0,
    ac_fake_in_d: bool = True,
):
    """(L_D, L_G) as trained: hinge adversarial terms plus weighted
    cross-entropy on real (for D) and fake (for G, and for D by default)."""
    d_adv, _, _ = hinge_d(real_out, fake_out)
    ce_real, _ = softmax_cross_entropy(class_logits_real, y)
    ce_fake, _ = softmax_cross_entropy(class_logits_fake, y)
    l_d = d_adv + lambda_ac * ce_real + (lambda_ac * ce_fake if ac_fake_in_d else 0.0)
    g_adv, _ = hinge_g(fake_out)
    l_g = g_adv + lambda_ac * ce_fake
    return l_d, l_g
