"""
Маскированные MAE / RMSE / MAPE и стратификация по классам влияния событий.

Пропуск (y == 0) исключается из всех метрик; для MAPE дополнительно
исключаются цели с |y| ниже порога.
"""

from __future__ import annotations

from datetime import datetime
from typing import Callable, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from fuse_traffic.core.constants import DEFAULT_HORIZONS, MAPE_MIN_ABS_TARGET
from fuse_traffic.core.errors import MetricError
from fuse_traffic.data.windows import WindowSample
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.events import EventRecord, Impact

Horizon = Union[int, Literal["average"]]


class MetricReport(BaseModel):
    mae: float = Field(ge=0.0)
    rmse: float = Field(ge=0.0)
    mape: float
    count: int = Field(gt=0)
    horizon: Horizon = "average"


class StratumReport(BaseModel):
    impact: Impact
    samples: int
    report: MetricReport
    horizons: List[MetricReport] = Field(default_factory=list)


def _evaluable(y: Matrix, mask: Optional[np.ndarray]) -> np.ndarray:
    observed = y != 0.0
    return observed if mask is None else observed & np.asarray(mask, dtype=bool)


def compute(
    y: Matrix,
    y_hat: Matrix,
    mask: Optional[np.ndarray] = None,
    mape_threshold: float = MAPE_MIN_ABS_TARGET,
    horizon: Horizon = "average",
) -> MetricReport:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape:
        raise MetricError(f"targets {y.shape} and predictions {y_hat.shape} differ in shape")
    keep = _evaluable(y, mask)
    count = int(keep.sum())
    if count == 0:
        raise MetricError("no evaluable entries")

    err = y_hat[keep] - y[keep]
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.sqrt(np.mean(err * err)))

    mape_keep = keep & (np.abs(y) >= mape_threshold)
    if mape_keep.any():
        mape = float(np.mean(np.abs((y_hat[mape_keep] - y[mape_keep]) / y[mape_keep])) * 100.0)
    else:
        logger.warning(f"⚠️ No targets with |y| >= {mape_threshold}, MAPE undefined")
        mape = float("nan")
    return MetricReport(mae=mae, rmse=rmse, mape=mape, count=count, horizon=horizon)


def per_horizon(
    y: Matrix,
    y_hat: Matrix,
    mask: Optional[np.ndarray] = None,
    horizons: Sequence[int] = DEFAULT_HORIZONS,
    mape_threshold: float = MAPE_MIN_ABS_TARGET,
) -> List[MetricReport]:
    """Отчёт на каждый горизонт k (только шаг k) и средний по всем H_out шагам"""
    y = np.asarray(y, dtype=np.float64)
    h_out = y.shape[-1]
    too_far = [h for h in horizons if h > h_out or h < 1]
    if too_far:
        raise MetricError(f"horizons {too_far} are outside 1..{h_out}")
    full_mask = _evaluable(y, mask)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    reports = [
        compute(y[..., h - 1], y_hat[..., h - 1], full_mask[..., h - 1], mape_threshold, h)
        for h in horizons
    ]
    reports.append(compute(y, y_hat, full_mask, mape_threshold, "average"))
    return reports


def assign_strata(
    samples: Sequence[WindowSample],
    records: Sequence[EventRecord],
    timestamp: Callable[[int], datetime],
    per_node: bool = False,
) -> np.ndarray:
    """
    Ранг класса влияния для каждого примера (или пары пример × узел).

    Класс равен максимуму среди событий, пересекающих целевое окно примера.
    Без событий Impact.none.
    """
    if not samples:
        return np.zeros((0,), dtype=np.int64)
    n = samples[0].y.shape[0]
    ranks = np.zeros((len(samples), n), dtype=np.int64)
    by_node: Dict[int, List[EventRecord]] = {}
    for r in records:
        if r.impact != Impact.none:
            by_node.setdefault(r.node_id, []).append(r)

    for i, sample in enumerate(samples):
        start = timestamp(sample.t_anchor + 1)
        end = timestamp(sample.target_end)
        for node, node_records in by_node.items():
            if node >= n:
                continue
            for r in node_records:
                if r.overlaps(start, end):
                    ranks[i, node] = max(ranks[i, node], r.impact.rank)
    return ranks if per_node else ranks.max(axis=1)


def stratify(
    y: Matrix,
    y_hat: Matrix,
    strata: np.ndarray,
    mask: Optional[np.ndarray] = None,
    horizons: Sequence[int] = (),
    mape_threshold: float = MAPE_MIN_ABS_TARGET,
) -> List[StratumReport]:
    """
    Метрики по классам влияния. `strata`: ранги формы (B,) или (B, N);
    классы без вычислимых элементов пропускаются.
    """
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    strata = np.asarray(strata)
    keep = _evaluable(y, mask)
    # (B,) или (B, N) → (B, N, H_out)
    expanded = np.broadcast_to(strata.reshape(strata.shape + (1,) * (y.ndim - strata.ndim)), y.shape)

    out: List[StratumReport] = []
    for impact in Impact.ordered():
        in_class = expanded == impact.rank
        class_mask = keep & in_class
        if not class_mask.any():
            continue
        samples = int(np.any(in_class.reshape(y.shape[0], -1), axis=1).sum())
        report = compute(y, y_hat, class_mask, mape_threshold, "average")
        by_horizon = [
            compute(y[..., h - 1], y_hat[..., h - 1], class_mask[..., h - 1], mape_threshold, h)
            for h in horizons
            if class_mask[..., h - 1].any()
        ]
        out.append(StratumReport(impact=impact, samples=samples, report=report, horizons=by_horizon))

    total = sum(s.report.count for s in out)
    if total != int(keep.sum()):
        raise MetricError(f"strata cover {total} entries, expected {int(keep.sum())}")
    return out
