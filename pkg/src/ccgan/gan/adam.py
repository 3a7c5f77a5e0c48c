"""Bias-corrected Adam over named parameter dicts."""

from __future__ import annotations

import numpy as np

from .layers import Param


class Adam:
    def __init__(self, params: dict[str, Param], lr: float,
                 beta1: float = 0.0, beta2: float = 0.9, eps: float = 1e-8):
        self.params = {k: p for k, p in params.items() if p.trainable}
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.value) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in self.params.items()}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, p in self.params.items():
            g = p.grad
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.value -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self) -> dict:
        return {"t": self.t, "m": self.m, "v": self.v}

    def load_state(self, state: dict):
        self.t = int(state["t"])
        for k in self.m:
            if k in state["m"]:
                self.m[k] = state["m"][k].astype(self.m[k].dtype)
                self.v[k] = state["v"][k].astype(self.v[k].dtype)
