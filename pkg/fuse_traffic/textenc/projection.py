from __future__ import annotations

from typing import List

import numpy as np

from fuse_traffic.core.errors import ShapeError
from fuse_traffic.nn.rng import xavier_init
from fuse_traffic.nn.tensor import ArrayLike, Parameter, Tensor, add, matmul


class Projection:
    """Обучаемая проекция E_text (d_text) в размерность модели d"""

    def __init__(self, d_text: int, d: int, rng: np.random.Generator):
        self.w = Parameter(xavier_init(d_text, d, rng), "text_proj.w")
        self.b = Parameter(np.zeros((1, d)), "text_proj.b")

    def parameters(self) -> List[Parameter]:
        return [self.w, self.b]

    def __call__(self, e: ArrayLike) -> Tensor:
        return project(e, self)


def project(e: ArrayLike, p: Projection) -> Tensor:
    e = e if isinstance(e, Tensor) else Tensor(e)
    if e.shape[-1] != p.w.shape[0]:
        raise ShapeError(f"text embedding width {e.shape[-1]} does not match projection {p.w.shape}")
    return add(matmul(e, p.w), p.b)
