"""AdamW (decoupled weight decay) over a single numpy parameter, plus the cosine schedule."""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np


def get_lr_cosine_schedule(it: int, base_lr: float, total_iters: int) -> float:
    """base_lr * 0.5 * (1 + cos(pi * it / total_iters)), annealing to 0."""
    if total_iters <= 0:
        return base_lr
    t = min(max(it, 0), total_iters)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * t / total_iters))


class AdamW:
    "AdamW optimizer."

    def __init__(
        self,
        weight_decay: float = 0.01,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.t = 0
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None

    def step(self, param: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        """Return the updated parameter; ``param`` itself is left untouched."""
        beta1, beta2 = self.betas
        if self.m is None or self.v is None:
            self.m = np.zeros_like(grad)
            self.v = np.zeros_like(grad)

        self.t += 1
        self.m = beta1 * self.m + (1.0 - beta1) * grad
        self.v = beta2 * self.v + (1.0 - beta2) * grad * grad

        m_hat = self.m / (1.0 - beta1**self.t)
        v_hat = self.v / (1.0 - beta2**self.t)

        if lr == 0.0:
            return param.copy()
        decayed = param * (1.0 - lr * self.weight_decay)
        return decayed - lr * m_hat / (np.sqrt(v_hat) + self.eps)
