from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from fuse_traffic.core.constants import COORD_DECIMALS, DEFAULT_INTERVAL_MINUTES
from fuse_traffic.core.utils import read_json, write_json
from fuse_traffic.schemas.events import EventRecord, QueryKey, Sensor, TemplateId

QueryRequest = Tuple[Sensor, datetime]


def floor_time(ts: datetime, grid_minutes: int) -> datetime:
    """Округление вниз до сетки от начала суток"""
    minute_of_day = ts.hour * 60 + ts.minute
    return ts.replace(second=0, microsecond=0) - timedelta(minutes=minute_of_day % grid_minutes)


def query_key(
    sensor: Sensor,
    anchor_time: datetime,
    template_id: TemplateId,
    grid_minutes: int = DEFAULT_INTERVAL_MINUTES,
) -> QueryKey:
    return QueryKey(
        lat_bucket=round(sensor.lat, COORD_DECIMALS) + 0.0,
        lon_bucket=round(sensor.lon, COORD_DECIMALS) + 0.0,
        time_bucket=floor_time(anchor_time, grid_minutes),
        template_id=template_id,
    )


def dedup(
    batch: Sequence[QueryRequest],
    template_id: TemplateId,
    grid_minutes: int = DEFAULT_INTERVAL_MINUTES,
) -> Tuple[List[QueryKey], List[int]]:
    """
    Уникальные ключи в порядке первого появления и обратное отображение:
    `back[i]`: индекс ключа для i-го запроса.
    """
    index: Dict[QueryKey, int] = {}
    back = []
    for sensor, ts in batch:
        key = query_key(sensor, ts, template_id, grid_minutes)
        if key not in index:
            index[key] = len(index)
        back.append(index[key])
    return list(index), back


def reassemble(
    batch: Sequence[QueryRequest],
    keys: Sequence[QueryKey],
    back: Sequence[int],
    results: Dict[QueryKey, List[EventRecord]],
) -> List[List[EventRecord]]:
    """Результаты по ключам обратно в порядок запросов с node_id сенсора"""
    out = []
    for (sensor, _), k in zip(batch, back):
        out.append([r.model_copy(update={"node_id": sensor.id}) for r in results[keys[k]]])
    return out


class EventCache:
    """
    Кеш ответов QueryKey → записи событий.

    Заполненный ключ не перезапрашивается в пределах запуска; счётчики
    попаданий и промахов точные. Ключ записывается один раз.
    """

    def __init__(self) -> None:
        self._store: Dict[QueryKey, List[EventRecord]] = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: QueryKey) -> Optional[List[EventRecord]]:
        records = self._store.get(key)
        if records is None:
            self.misses += 1
        else:
            self.hits += 1
        return records

    def put(self, key: QueryKey, records: List[EventRecord]) -> None:
        if key in self._store:
            logger.debug(f"Cache already holds {key}, keeping the first result")
            return
        self._store[key] = list(records)

    def __contains__(self, key: object) -> bool:
        return key in self._store

    def __len__(self) -> int:
        return len(self._store)

    def __iter__(self) -> Iterator[QueryKey]:
        return iter(self._store)

    def records(self, key: QueryKey) -> List[EventRecord]:
        """Чтение без учёта в счётчиках"""
        return self._store[key]

    def save(self, path: Path) -> None:
        payload = [
            {
                "key": key.model_dump(mode="json"),
                "records": [r.model_dump(mode="json") for r in records],
            }
            for key, records in sorted(self._store.items(), key=lambda kv: kv[0].canonical)
        ]
        write_json(path, payload)

    @classmethod
    def load(cls, path: Path) -> "EventCache":
        cache = cls()
        for entry in read_json(path):
            key = QueryKey.model_validate(entry["key"])
            cache.put(key, [EventRecord.model_validate(r) for r in entry["records"]])
        logger.info(f"📦 Loaded {len(cache)} cached event keys from {path}")
        return cache
