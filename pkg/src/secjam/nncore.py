"""Tiny dense networks with explicit backpropagation, Adam, and soft target
updates.

All arithmetic is float64 numpy; the networks are small enough that
reproducibility matters more than speed. A forward pass accepts a single
vector or a (batch, dim) matrix and returns a cache consumed by backward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class MLP:
    """Fully-connected net, ReLU hidden layers, identity or tanh output."""

    def __init__(
        self,
        widths: list[int],
        output: str = "identity",
        rng: np.random.Generator | None = None,
    ):
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if output not in ("identity", "tanh"):
            raise ValueError(f"unknown output activation {output!r}")
        self.widths = [int(w) for w in widths]
        self.output = output
        self.W: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        for nin, nout in zip(self.widths[:-1], self.widths[1:]):
            bound = np.sqrt(6.0 / nin)
            if rng is None:
                w = np.zeros((nin, nout))
            else:
                w = rng.uniform(-bound, bound, size=(nin, nout))
            self.W.append(w)
            self.b.append(np.zeros(nout))

    @property
    def n_layers(self) -> int:
        return len(self.W)

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, W then b per layer. Arrays are live views."""
        out = []
        for w, b in zip(self.W, self.b):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x) -> tuple[np.ndarray, dict]:
        """Returns (output, cache). Output matches the input's batch shape."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.widths[0]:
            raise ValueError(
                f"input width {x.shape[1]} != expected {self.widths[0]}"
            )
        post = [x]
        h = x
        last = self.n_layers - 1
        for i in range(self.n_layers):
            z = h @ self.W[i]
            z += self.b[i]
            if i < last:
                h = np.maximum(z, 0.0, out=z)
            elif self.output == "tanh":
                h = np.tanh(z, out=z)
            else:
                h = z
            post.append(h)
        cache = {"post": post, "single": single, "net": self}
        y = h[0] if single else h
        return y, cache

    def backward(self, cache: dict, grad_output) -> tuple[list[np.ndarray], np.ndarray]:
        """Exact reverse-mode gradients.

        Returns (parameter gradients aligned with parameters(), gradient
        with respect to the input).
        """
        if cache.get("net") is not self:
            raise ValueError("cache does not belong to this network")
        g = np.asarray(grad_output, dtype=float)
        single = cache["single"]
        if single:
            g = g[None, :]
        post = cache["post"]
        if g.shape != post[-1].shape:
            raise ValueError(
                f"grad_output shape {g.shape} != output shape {post[-1].shape}"
            )
        if self.output == "tanh":
            g = g * (1.0 - post[-1] ** 2)
        grads: list[np.ndarray] = [None] * (2 * self.n_layers)
        for i in range(self.n_layers - 1, -1, -1):
            grads[2 * i] = post[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.W[i].T
            if i > 0:
                # hidden activations are ReLU outputs; positive iff active
                g *= post[i] > 0
        return grads, (g[0] if single else g)

    def copy(self) -> "MLP":
        other = MLP(self.widths, output=self.output)
        for i in range(self.n_layers):
            other.W[i] = self.W[i].copy()
            other.b[i] = self.b[i].copy()
        return other

    def to_dict(self) -> dict:
        return {
            "widths": self.widths,
            "output": self.output,
            "layers": [
                {"W": w.tolist(), "b": b.tolist()}
                for w, b in zip(self.W, self.b)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLP":
        net = cls(d["widths"], output=d["output"])
        for i, layer in enumerate(d["layers"]):
            net.W[i] = np.asarray(layer["W"], dtype=float)
            net.b[i] = np.asarray(layer["b"], dtype=float)
            if net.W[i].shape != (net.widths[i], net.widths[i + 1]):
                raise ValueError("checkpoint layer shape mismatch")
        return net


@dataclass
class Adam:
    """Bias-corrected adaptive-moment optimizer over a parameter list."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Updates params in place."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        if len(params) != len(grads) or len(params) != len(self.m):
            raise ValueError("parameter/gradient count mismatch")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError("parameter/gradient shape mismatch")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def soft_update(target: MLP, online: MLP, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, elementwise."""
    if target.widths != online.widths or target.output != online.output:
        raise ValueError("architectures differ")
    for pt, po in zip(target.parameters(), online.parameters()):
        pt *= 1.0 - tau
        pt += tau * po


def save_net(net: MLP, path: str) -> None:
    """Write one network as a JSON checkpoint (format documented in the
    README's checkpoint section)."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"format": "secjam-net-v1", **net.to_dict()}, f)


def load_net(path: str) -> MLP:
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    if d.get("format") != "secjam-net-v1":
        raise ValueError("not a secjam net checkpoint")
    return MLP.from_dict(d)
