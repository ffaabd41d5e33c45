from __future__ import annotations

from typing import List

import numpy as np

from fuse_traffic.nn.rng import xavier_init
from fuse_traffic.nn.tensor import Parameter, Tensor, add, matmul


class Decoder:
    """Полносвязный слой H_fused (…, N, d) → Ŷ (…, N, H_out)"""

    def __init__(self, d: int, h_out: int, rng: np.random.Generator):
        self.w = Parameter(xavier_init(d, h_out, rng), "decoder.w")
        self.b = Parameter(np.zeros((1, h_out)), "decoder.b")

    def parameters(self) -> List[Parameter]:
        return [self.w, self.b]

    def __call__(self, h: Tensor) -> Tensor:
        return add(matmul(h, self.w), self.b)
