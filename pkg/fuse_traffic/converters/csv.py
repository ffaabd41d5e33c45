"""Табличные выгрузки результатов в CSV (pandas)"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from fuse_traffic.core.constants import (
    ATTENTION_CSV_COLUMNS,
    HISTORY_CSV_COLUMNS,
    REPORT_CSV_COLUMNS,
    TIMESTAMP_FORMAT,
)
from fuse_traffic.metrics.evaluation import MetricReport, StratumReport
from fuse_traffic.training.trainer import EpochRecord

Row = Mapping[str, Any]


def write_rows(path: Path, rows: Sequence[Row], columns: Sequence[str]) -> Path:
    """
    Запись строк в CSV с фиксированным порядком колонок

    Args:
        path: Файл назначения
        rows: Строки-словари; лишние ключи отбрасываются
        columns: Заголовок CSV

    Returns:
        Путь к записанному файлу
    """
    frame = pd.DataFrame(list(rows), columns=list(columns))
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def report_rows(
    overall: Sequence[MetricReport], strata: Sequence[StratumReport] = ()
) -> List[Dict[str, Any]]:
    rows = [{"stratum": "all", **_metric_row(r)} for r in overall]
    for s in strata:
        for r in [*s.horizons, s.report]:
            rows.append({"stratum": s.impact.value, **_metric_row(r)})
    return rows


def _metric_row(r: MetricReport) -> Dict[str, Any]:
    return {"horizon": r.horizon, "mae": r.mae, "rmse": r.rmse, "mape": r.mape, "count": r.count}


def write_report_csv(
    path: Path, overall: Sequence[MetricReport], strata: Sequence[StratumReport] = ()
) -> Path:
    return write_rows(path, report_rows(overall, strata), REPORT_CSV_COLUMNS)


def write_history_csv(path: Path, history: Sequence[EpochRecord]) -> Path:
    rows = [
        {"epoch": h.epoch, "train_mae": h.train_mae, "val_mae": h.val_mae, "seconds": h.seconds}
        for h in history
    ]
    return write_rows(path, rows, HISTORY_CSV_COLUMNS)


def write_attention_csv(path: Path, weights: np.ndarray) -> Path:
    """Карты внимания (h, N, N) в длинном формате"""
    heads, n, _ = weights.shape
    rows = [
        {"head": h, "query_node": q, "key_node": k, "weight": float(weights[h, q, k])}
        for h in range(heads)
        for q in range(n)
        for k in range(n)
    ]
    return write_rows(path, rows, ATTENTION_CSV_COLUMNS)


def write_embeddings_csv(
    path: Path,
    blocks: Mapping[str, np.ndarray],
    anchors: Sequence[int],
    timestamps: Sequence[datetime],
    strata: Optional[np.ndarray] = None,
) -> Path:
    """
    Строки эмбеддингов для внешнего 2-D снижения размерности.

    `blocks`: вид представления (e_st, e_text, h_fused) → массив (B, N, d).
    """
    rows: List[Dict[str, Any]] = []
    width = 0
    for kind, values in blocks.items():
        width = max(width, values.shape[-1])
        for b, (anchor, ts) in enumerate(zip(anchors, timestamps)):
            for node in range(values.shape[1]):
                row: Dict[str, Any] = {
                    "kind": kind,
                    "sample": b,
                    "t_anchor": anchor,
                    "timestamp": ts.strftime(TIMESTAMP_FORMAT),
                    "node": node,
                    "impact": int(strata[b, node]) if strata is not None else 0,
                }
                row.update({f"e_{j}": float(v) for j, v in enumerate(values[b, node])})
                rows.append(row)
    columns = ["kind", "sample", "t_anchor", "timestamp", "node", "impact"]
    return write_rows(path, rows, columns + [f"e_{j}" for j in range(width)])


def write_impact_distribution_csv(path: Path, rows: Sequence[Row]) -> Path:
    return write_rows(path, rows, ["impact", "count", "share"])


def write_sweep_csv(path: Path, rows: Sequence[Row]) -> Path:
    return write_rows(path, rows, ["knob", "value", "seed", "val_mae", "test_mae"])


def write_study_csv(path: Path, rows: Sequence[Row]) -> Path:
    return write_rows(
        path, rows, ["variant", "template", "seed", "stratum", "mae", "rmse", "mape", "count"]
    )


def write_case_study_csv(path: Path, rows: Sequence[Row]) -> Path:
    return write_rows(
        path, rows, ["t", "timestamp", "truth", "pred_event", "pred_no_event", "impact"]
    )
