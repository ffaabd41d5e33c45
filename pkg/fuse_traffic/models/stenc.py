"""
Эталонный пространственно-временной энкодер.

Слой: причинная 1-D свёртка по времени + ReLU, затем пространственное
смешивание Â·C·W + ReLU, затем остаточная связь. После L слоёв берётся
состояние последнего шага (или среднее по времени) каждого узла.

Внутреннее представление: стопка (..., T, N, d): время на оси -3.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from fuse_traffic.core.errors import ConfigurationError, ShapeError
from fuse_traffic.nn.rng import xavier_init
from fuse_traffic.nn.tensor import (
    ArrayLike,
    Matrix,
    Parameter,
    Tensor,
    add,
    dropout,
    matmul,
    mean_axis,
    relu,
    select_axis,
    shift_axis,
)
from fuse_traffic.schemas.config import STEncoderConfig

EstEmbedding = Tensor

TIME_AXIS = -3


class STLayer:
    def __init__(self, index: int, d: int, kernel: int, rng: np.random.Generator):
        prefix = f"st.layer{index}"
        self.conv = [Parameter(xavier_init(d, d, rng), f"{prefix}.conv{j}.w") for j in range(kernel)]
        self.conv_b = Parameter(np.zeros((1, d)), f"{prefix}.conv.b")
        self.spatial = Parameter(xavier_init(d, d, rng), f"{prefix}.spatial.w")
        self.spatial_b = Parameter(np.zeros((1, d)), f"{prefix}.spatial.b")

    def parameters(self) -> List[Parameter]:
        return [*self.conv, self.conv_b, self.spatial, self.spatial_b]

    def __call__(
        self,
        h: Tensor,
        a_hat: Tensor,
        rate: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        # свёртка: out[t] = sum_j h[t - j] @ W_j
        mixed = matmul(h, self.conv[0])
        for j in range(1, len(self.conv)):
            mixed = add(mixed, matmul(shift_axis(h, TIME_AXIS, j), self.conv[j]))
        temporal = relu(add(mixed, self.conv_b))
        spatial = relu(add(matmul(matmul(a_hat, temporal), self.spatial), self.spatial_b))
        return add(h, dropout(spatial, rate, rng))


class STEncoder:
    """Энкодер x (…, N, H_in) → E_st (…, N, d)"""

    def __init__(self, config: STEncoderConfig, rng: np.random.Generator):
        self.config = config
        d = config.hidden
        self.w_in = Parameter(xavier_init(1, d, rng), "st.input.w")
        self.b_in = Parameter(np.zeros((1, d)), "st.input.b")
        self.layers = [STLayer(i, d, config.temporal_kernel, rng) for i in range(config.layers)]

    def parameters(self) -> List[Parameter]:
        params = [self.w_in, self.b_in]
        for layer in self.layers:
            params.extend(layer.parameters())
        return params

    def __call__(
        self,
        x: ArrayLike,
        a_hat: Matrix,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> EstEmbedding:
        return encode(x, a_hat, self, training, rng)


def encode(
    x: ArrayLike,
    a_hat: Matrix,
    encoder: STEncoder,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> EstEmbedding:
    data = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    if data.ndim < 2:
        raise ShapeError(f"encoder input must be (..., N, H_in), got {data.shape}")
    n, h_in = data.shape[-2], data.shape[-1]
    if a_hat.shape != (n, n):
        raise ShapeError(f"adjacency {a_hat.shape} does not match {n} nodes")
    if h_in < encoder.config.temporal_kernel:
        raise ConfigurationError(
            f"input window H_in={h_in} is shorter than temporal_kernel={encoder.config.temporal_kernel}"
        )

    # (..., N, H_in) -> (..., T, N, 1)
    stacked = Tensor(np.swapaxes(data, -1, -2)[..., None])
    h = add(matmul(stacked, encoder.w_in), encoder.b_in)
    rate = encoder.config.dropout_rate if training else 0.0
    adjacency = Tensor(a_hat)
    for layer in encoder.layers:
        h = layer(h, adjacency, rate, rng)

    if encoder.config.pooling == "mean":
        return mean_axis(h, TIME_AXIS)
    return select_axis(h, TIME_AXIS, h_in - 1)
