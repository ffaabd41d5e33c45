"""Файловые форматы датасета: ряд (CSV + JSON sidecar), сенсоры, расстояния, события"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import TypeAdapter

from fuse_traffic.core.errors import DataValidationError
from fuse_traffic.core.utils import read_json, write_json
from fuse_traffic.data.series import TrafficSeries
from fuse_traffic.nn.tensor import Matrix
from fuse_traffic.schemas.events import EventRecord, Sensor, SynthEvent

SERIES_CSV = "series.csv"
SERIES_SIDECAR = "series.json"
SENSORS_CSV = "sensors.csv"
EVENTS_JSON = "events.json"
EVENT_SCRIPT_JSON = "event_script.json"

_records_adapter = TypeAdapter(List[EventRecord])
_script_adapter = TypeAdapter(List[SynthEvent])


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    return path


def save_series(series: TrafficSeries, directory: Path) -> Tuple[Path, Path]:
    """CSV `t, v_0, ..., v_{N-1}` (строка на шаг) и sidecar с метаданными"""
    columns = {"t": np.arange(series.t)}
    for i in range(series.n):
        columns[f"v_{i}"] = series.values[i]
    csv_path = directory / SERIES_CSV
    pd.DataFrame(columns).to_csv(csv_path, index=False, lineterminator="\n")
    sidecar = directory / SERIES_SIDECAR
    write_json(
        sidecar,
        {
            "n": series.n,
            "t": series.t,
            "interval_minutes": series.interval_minutes,
            "start_time": series.start_time.isoformat(),
            "kind": series.kind,
        },
    )
    return csv_path, sidecar


def load_series(directory: Path) -> TrafficSeries:
    meta = read_json(_require(directory / SERIES_SIDECAR))
    frame = pd.read_csv(_require(directory / SERIES_CSV))
    value_columns = [c for c in frame.columns if c != "t"]
    if len(value_columns) != meta["n"] or len(frame) != meta["t"]:
        raise DataValidationError(
            f"series.csv shape ({len(frame)} x {len(value_columns)}) "
            f"disagrees with sidecar (t={meta['t']}, n={meta['n']})"
        )
    values = frame[value_columns].to_numpy(dtype=np.float64).T.copy()
    return TrafficSeries(
        values=values,
        interval_minutes=int(meta["interval_minutes"]),
        start_time=datetime.fromisoformat(meta["start_time"]),
        kind=meta.get("kind", "speed"),
    )


def save_sensors(sensors: Sequence[Sensor], path: Path) -> None:
    frame = pd.DataFrame([s.model_dump() for s in sensors], columns=["id", "lat", "lon"])
    frame.to_csv(path, index=False, lineterminator="\n")


def load_sensors(path: Path) -> List[Sensor]:
    """Файл `id,lat,lon`"""
    frame = pd.read_csv(_require(path))
    missing = {"id", "lat", "lon"} - set(frame.columns)
    if missing:
        raise DataValidationError(f"sensor file {path} lacks columns {sorted(missing)}")
    try:
        sensors = [
            Sensor(id=int(row.id), lat=float(row.lat), lon=float(row.lon))
            for row in frame.itertuples(index=False)
        ]
    except ValueError as e:
        raise DataValidationError(f"invalid sensor row in {path}: {e}") from e
    sensors.sort(key=lambda s: s.id)
    if [s.id for s in sensors] != list(range(len(sensors))):
        raise DataValidationError("sensor ids must be dense and unique in [0, N)")
    return sensors


def load_distances(path: Path, n: int) -> Matrix:
    """
    Файл `from,to,km`. Пара, заданная в одну сторону, зеркалится;
    противоречивые направления дают ошибку, отсутствующие пары → inf.
    """
    frame = pd.read_csv(_require(path))
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    seen: dict[Tuple[int, int], float] = {}
    missing = {"from", "to", "km"} - set(frame.columns)
    if missing:
        raise DataValidationError(f"distance file {path} lacks columns {sorted(missing)}")
    for src, dst, dist in frame[["from", "to", "km"]].itertuples(index=False, name=None):
        i, j, km = int(src), int(dst), float(dist)
        if not (0 <= i < n and 0 <= j < n):
            raise DataValidationError(f"distance pair ({i}, {j}) outside [0, {n})")
        if km < 0.0:
            raise DataValidationError(f"negative distance for pair ({i}, {j})")
        if i == j:
            continue
        seen[(i, j)] = km
    for (i, j), km in seen.items():
        back = seen.get((j, i))
        if back is not None and back != km:
            raise DataValidationError(f"asymmetric distances for pair ({i}, {j}): {km} vs {back}")
        d[i, j] = d[j, i] = km
    logger.debug(f"Loaded {len(seen)} distance pairs from {path}")
    return d


def save_event_records(records: Sequence[EventRecord], path: Path) -> None:
    write_json(path, [r.model_dump(mode="json") for r in records])


def load_event_records(path: Path) -> List[EventRecord]:
    return _records_adapter.validate_python(read_json(_require(path)))


def save_event_script(events: Sequence[SynthEvent], path: Path) -> None:
    write_json(path, [e.model_dump(mode="json") for e in events])


def load_event_script(path: Path) -> List[SynthEvent]:
    """JSON-массив объектов SynthEvent"""
    return _script_adapter.validate_python(read_json(_require(path)))


def load_external_embeddings(path: Path, d_text: int | None = None) -> Dict[int, np.ndarray]:
    """Файл `sensor_id, e_0, ..., e_{d_text-1}`: вектор внешнего энкодера на сенсор"""
    frame = pd.read_csv(_require(path))
    if "sensor_id" not in frame.columns:
        raise DataValidationError(f"embedding file {path} lacks a sensor_id column")
    value_columns = [c for c in frame.columns if c != "sensor_id"]
    if d_text is not None and len(value_columns) != d_text:
        raise DataValidationError(
            f"embedding file {path} has {len(value_columns)} dims, expected {d_text}"
        )
    values = frame[value_columns].to_numpy(dtype=np.float64)
    ids = frame["sensor_id"].to_numpy()
    if len(set(ids.tolist())) != len(ids):
        raise DataValidationError(f"duplicate sensor ids in {path}")
    logger.info(f"📦 Loaded {len(ids)} external embeddings ({len(value_columns)} dims) from {path}")
    return {int(i): row for i, row in zip(ids, values)}
