from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

from fuse_traffic.core.constants import ADAM_BETAS, ADAM_EPS, DEFAULT_LR
from fuse_traffic.nn.tensor import Parameter


class Adam:
    """Адаптивные первый и второй моменты с коррекцией смещения"""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = DEFAULT_LR,
        betas: Tuple[float, float] = ADAM_BETAS,
        eps: float = ADAM_EPS,
    ):
        if lr < 0:
            raise ValueError(f"learning rate must be non-negative, got {lr}")
        # замороженные параметры в оптимизатор не попадают
        self.params: List[Parameter] = [p for p in params if p.trainable]
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self._m: Dict[int, np.ndarray] = {id(p): np.zeros_like(p.data) for p in self.params}
        self._v: Dict[int, np.ndarray] = {id(p): np.zeros_like(p.data) for p in self.params}

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.steps += 1
        c1 = 1.0 - self.beta1**self.steps
        c2 = 1.0 - self.beta2**self.steps
        for p in self.params:
            m = self._m[id(p)]
            v = self._v[id(p)]
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad * p.grad
            if self.lr == 0.0:
                continue
            p.value = p.data - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
