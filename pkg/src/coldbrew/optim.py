"""SGD and Adam over lists of parameter tensors."""

from __future__ import annotations

import numpy as np

from .tape import Tensor


class Optimizer:
    """Deterministic full-batch optimizer; kind is "sgd" or "adam".

    Adam uses beta1=0.9, beta2=0.999, eps=1e-8 with bias correction.
    weight_decay is classic L2 added to the gradient.
    """

    def __init__(self, params: list[Tensor], kind: str = "adam",
                 learning_rate: float = 0.001, weight_decay: float = 0.0,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {kind!r}")
        self.params = list(params)
        self.kind = kind
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0
        if kind == "adam":
            self._m = [np.zeros_like(p.data) for p in self.params]
            self._v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.step_count += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            if p.grad.shape != p.data.shape:
                raise ValueError(
                    f"gradient shape {p.grad.shape} does not match parameter "
                    f"{p.name or i} of shape {p.data.shape}")
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            if self.kind == "sgd":
                p.data = p.data - self.learning_rate * g
            else:
                self._m[i] = self.beta1 * self._m[i] + (1 - self.beta1) * g
                self._v[i] = self.beta2 * self._v[i] + (1 - self.beta2) * g * g
                m_hat = self._m[i] / (1 - self.beta1 ** self.step_count)
                v_hat = self._v[i] / (1 - self.beta2 ** self.step_count)
                p.data = p.data - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
