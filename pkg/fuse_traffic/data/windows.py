from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple

import numpy as np
from loguru import logger

from fuse_traffic.core.errors import ConfigurationError, DataValidationError
from fuse_traffic.data.series import NormStats, TrafficSeries, normalize_values
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.config import SplitSpec


@dataclass(frozen=True, eq=False)
class WindowSample:
    """
    Один обучающий пример: x: N×H_in (нормализованный), y: N×H_out (исходные единицы).

    t_anchor: индекс последнего входного шага.
    """

    x: Matrix
    y: Matrix
    t_anchor: int

    @property
    def h_in(self) -> int:
        return int(self.x.shape[1])

    @property
    def h_out(self) -> int:
        return int(self.y.shape[1])

    @property
    def input_start(self) -> int:
        return self.t_anchor - self.h_in + 1

    @property
    def target_end(self) -> int:
        return self.t_anchor + self.h_out

    @property
    def y_mask(self) -> np.ndarray:
        return self.y != 0.0


@dataclass(frozen=True)
class DatasetSplit:
    train: List[WindowSample]
    val: List[WindowSample]
    test: List[WindowSample]
    dropped: int = 0


def window_count(t: int, h_in: int, h_out: int, stride: int = 1) -> int:
    if t < h_in + h_out:
        return 0
    return (t - h_in - h_out) // stride + 1


def make_windows(
    series: TrafficSeries, h_in: int, h_out: int, stride: int = 1, stats: NormStats | None = None
) -> List[WindowSample]:
    """
    Скользящие окна в хронологическом порядке.

    Без `stats` вход x остаётся в исходных единицах (нормализуется позже
    через `normalize_windows`, когда известны статистики обучающей части).
    """
    if h_in < 1 or h_out < 1:
        raise ConfigurationError(f"window lengths must be >= 1, got H_in={h_in}, H_out={h_out}")
    if stride < 1:
        raise ConfigurationError(f"stride must be >= 1, got {stride}")
    count = window_count(series.t, h_in, h_out, stride)
    if count == 0:
        raise DataValidationError(
            f"series of length {series.t} yields no windows, need at least {h_in + h_out} steps"
        )
    values = series.values
    samples = []
    for k in range(count):
        anchor = h_in - 1 + k * stride
        x = values[:, anchor - h_in + 1 : anchor + 1].copy()
        y = values[:, anchor + 1 : anchor + 1 + h_out].copy()
        if stats is not None:
            x = normalize_values(x, stats)
        samples.append(WindowSample(x=x, y=y, t_anchor=anchor))
    return samples


def normalize_windows(samples: Sequence[WindowSample], stats: NormStats) -> List[WindowSample]:
    return [replace(s, x=normalize_values(s.x, stats)) for s in samples]


def split_sizes(n: int, fractions: SplitSpec) -> Tuple[int, int, int]:
    """Размеры частей до отбрасывания граничных примеров"""
    if n <= 0:
        raise DataValidationError("cannot split an empty sample list")
    if n == 1:
        return 1, 0, 0
    n_train = int(round(n * fractions.train_frac))
    n_val = int(round(n * fractions.val_frac))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def _drop_overlap(block: List[WindowSample], last_used: int) -> Tuple[List[WindowSample], int]:
    """Отбрасывает начальные примеры, чьё входное окно задевает предыдущую часть"""
    kept = [s for s in block if s.input_start > last_used]
    return kept, len(block) - len(kept)


def chronological_split(samples: Sequence[WindowSample], fractions: SplitSpec) -> DatasetSplit:
    """
    Непрерывные хронологические части train/val/test.

    Пример val/test, чьё входное окно пересекает шаги, уже использованные
    предыдущей частью (включая её целевые окна), отбрасывается и учитывается.
    """
    anchors = [s.t_anchor for s in samples]
    if any(b <= a for a, b in zip(anchors, anchors[1:])):
        raise DataValidationError("samples must be in chronological order")

    samples = list(samples)
    n_train, n_val, _ = split_sizes(len(samples), fractions)
    if len(samples) == 1:
        logger.warning("⚠️ Only one sample available, assigning it to train")
        return DatasetSplit(train=samples, val=[], test=[], dropped=0)

    train = samples[:n_train]
    val = samples[n_train : n_train + n_val]
    test = samples[n_train + n_val :]

    dropped = 0
    last_used = max((s.target_end for s in train), default=-1)
    val, d = _drop_overlap(val, last_used)
    dropped += d
    last_used = max([last_used] + [s.target_end for s in val])
    test, d = _drop_overlap(test, last_used)
    dropped += d

    if dropped:
        logger.warning(f"⚠️ Dropped {dropped} boundary samples crossing split boundaries")
    logger.info(
        f"📊 Split: train={len(train)}, val={len(val)}, test={len(test)}, dropped={dropped}"
    )
    return DatasetSplit(train=train, val=val, test=test, dropped=dropped)


def stack_samples(samples: Sequence[WindowSample]) -> Tuple[Matrix, Matrix, Matrix]:
    """(B, N, H_in), (B, N, H_out), маска (B, N, H_out)"""
    x = np.stack([s.x for s in samples])
    y = np.stack([s.y for s in samples])
    return x, y, y != 0.0
