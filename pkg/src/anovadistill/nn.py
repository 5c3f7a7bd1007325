"""Minimal fully-connected network with hand-rolled backprop and Adam.

Used by the feedforward fitting backend: one small ReLU network per ANOVA
component, all trained jointly against the black box's outputs.  Kept
dependency-free so fitted models stay serializable as plain arrays.
"""

from __future__ import annotations

import numpy as np


class Mlp:
    """ReLU hidden layers, linear scalar output."""

    def __init__(self, dim_in: int, hidden: tuple[int, ...], rng: np.random.Generator,
                 init_scale: float = 1.0):
        sizes = (dim_in, *hidden, 1)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)) * init_scale
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def forward(self, X: np.ndarray):
        acts = [np.asarray(X, dtype=float)]
        a = acts[0]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            a = z if i == last else np.maximum(z, 0.0)
            acts.append(a)
        return a[:, 0], acts

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, acts, dy: np.ndarray):
        """Parameter gradients for upstream dL/dy of shape (n,)."""
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = dy[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            a_prev = acts[i]
            grads_w[i] = a_prev.T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0.0)
        return grads_w, grads_b

    # -- flat parameter views for optimizers and serialization ----------
    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def set_params(self, params: list[np.ndarray]) -> None:
        nw = len(self.weights)
        self.weights = [np.asarray(p, dtype=float) for p in params[:nw]]
        self.biases = [np.asarray(p, dtype=float) for p in params[nw:]]

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @staticmethod
    def from_dict(d: dict) -> "Mlp":
        net = Mlp.__new__(Mlp)
        net.weights = [np.asarray(w, dtype=float) for w in d["weights"]]
        net.biases = [np.asarray(b, dtype=float) for b in d["biases"]]
        return net


class Adam:
    """Adam with decoupled weight decay, one state slot per parameter array."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 weight_decay: float = 0.0, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.weight_decay = weight_decay
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            if self.weight_decay:
                g = g + self.weight_decay * p
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mhat = self.m[i] / (1 - self.b1**self.t)
            vhat = self.v[i] / (1 - self.b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
