"""Adam optimizer with bias correction, written against the named-array
parameter store."""

from __future__ import annotations

import numpy as np

from .network import ModelParameters


class AdamState:
    """Per-parameter first/second moment accumulators and step counter."""

    def __init__(
        self,
        params: ModelParameters,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(a) for name, a in params.arrays.items()}
        self.v = {name: np.zeros_like(a) for name, a in params.arrays.items()}

    def step(self, params: ModelParameters, grads: dict[str, np.ndarray], lr: float) -> None:
        """Apply one bias-corrected update in place."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params.arrays[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
