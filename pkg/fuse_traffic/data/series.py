from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Optional, Union

import numpy as np
from loguru import logger

from fuse_traffic.core.constants import STD_FLOOR
from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.config import SeriesKind


@dataclass(frozen=True, eq=False)
class TrafficSeries:
    """
    Матрица N×T статуса трафика.

    Пропуск наблюдения закодирован ровно нулём (соглашение датасетов).
    """

    values: Matrix
    interval_minutes: int
    start_time: datetime
    kind: SeriesKind = "speed"
    # маска наблюдений нормализованного ряда (там ноль уже не означает пропуск)
    observed: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise DataValidationError(f"series must be a non-empty N x T matrix, got {self.values.shape}")
        if self.interval_minutes < 1:
            raise DataValidationError("interval_minutes must be positive")
        if not np.all(np.isfinite(self.values)):
            raise DataValidationError("series contains non-finite values")
        if self.observed is None and np.any(self.values < 0.0):
            raise DataValidationError("series contains negative observations")

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def t(self) -> int:
        return int(self.values.shape[1])

    @property
    def mask(self) -> np.ndarray:
        if self.observed is not None:
            return self.observed
        return self.values != 0.0

    def timestamp(self, index: int) -> datetime:
        return self.start_time + timedelta(minutes=self.interval_minutes * index)


@dataclass(frozen=True)
class NormStats:
    """Глобальные скалярные статистики Z-нормализации"""

    mean: float
    std: float

    def __post_init__(self) -> None:
        if not self.std > 0.0:
            raise DataValidationError(f"std must be positive, got {self.std}")

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}


def fit_normalizer(series: TrafficSeries, train_range: range) -> NormStats:
    """Статистики по непропущенным значениям только из обучающего диапазона"""
    if len(train_range) == 0:
        raise DataValidationError("train_range is empty")
    if train_range.start < 0 or train_range.stop > series.t:
        raise DataValidationError(f"train_range {train_range} exceeds series length {series.t}")
    block = series.values[:, train_range.start : train_range.stop : train_range.step]
    observed = block[block != 0.0]
    if observed.size == 0:
        raise DataValidationError("training range contains only missing observations")
    mean = float(np.mean(observed))
    std = float(np.std(observed))
    if std < STD_FLOOR:
        logger.warning(f"⚠️ Training std {std:.3e} below floor, using {STD_FLOOR}")
        std = STD_FLOOR
    return NormStats(mean=mean, std=std)


def normalize_values(values: Matrix, stats: NormStats) -> Matrix:
    """z = (x - mean) / std на наблюдённых значениях; пропуски остаются нулём"""
    observed = values != 0.0
    return np.where(observed, (values - stats.mean) / stats.std, 0.0)


def normalize(series: TrafficSeries, stats: NormStats) -> TrafficSeries:
    return replace(series, values=normalize_values(series.values, stats), observed=series.mask)


def denormalize(values: Union[Matrix, float], stats: NormStats) -> Matrix:
    return np.asarray(values, dtype=np.float64) * stats.std + stats.mean
