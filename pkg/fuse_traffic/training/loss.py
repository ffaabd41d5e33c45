from __future__ import annotations

import numpy as np

from fuse_traffic.core.errors import MetricError
from fuse_traffic.data.series import NormStats
from fuse_traffic.nn.tensor import Matrix, Tensor, absolute, add, mul, scale, sum_all


def masked_mae(pred: Tensor, y: Matrix, mask: np.ndarray, stats: NormStats) -> Tensor:
    """
    MAE в исходных единицах по наблюдённым целям.

    Прогноз денормализуется внутри графа; элементы вне маски дают нулевой
    вклад и нулевой градиент.
    """
    if pred.shape != y.shape or y.shape != mask.shape:
        raise MetricError(f"loss shapes differ: pred {pred.shape}, y {y.shape}, mask {mask.shape}")
    weights = np.asarray(mask, dtype=np.float64)
    count = float(weights.sum())
    if count == 0.0:
        raise MetricError("no evaluable entries")
    restored = add(scale(pred, stats.std), stats.mean)
    err = absolute(add(restored, -np.asarray(y, dtype=np.float64)))
    return scale(sum_all(mul(err, weights)), 1.0 / count)
