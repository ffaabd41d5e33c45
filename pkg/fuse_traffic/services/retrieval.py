"""Поиск событий: дедуплицированные запросы к провайдеру через кеш, с повторами и лимитами"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from loguru import logger

from fuse_traffic.core.constants import (
    DEFAULT_INTERVAL_MINUTES,
    DEFAULT_MAX_CONCURRENCY,
    DEFAULT_RATE_PER_SECOND,
    MAX_RETRY_ATTEMPTS,
    RETRY_DELAY_SECONDS,
)
from fuse_traffic.core.errors import ResponseParseError
from fuse_traffic.schemas.config import EventsSection
from fuse_traffic.schemas.events import (
    EventRecord,
    Impact,
    QueryKey,
    RetrievalStats,
    Sensor,
    TemplateId,
)
from fuse_traffic.services.event_parser import none_record, parse_response
from fuse_traffic.services.event_query import EventCache, query_key
from fuse_traffic.services.prompting import prediction_window, render_prompt
from fuse_traffic.services.providers.base import EventProvider


@dataclass(frozen=True)
class RetrievalLimits:
    max_retries: int = MAX_RETRY_ATTEMPTS
    retry_base_delay_s: float = RETRY_DELAY_SECONDS
    max_concurrency: int = DEFAULT_MAX_CONCURRENCY
    rate_per_second: float = DEFAULT_RATE_PER_SECOND

    @classmethod
    def from_config(cls, config: EventsSection) -> "RetrievalLimits":
        return cls(
            max_retries=config.max_retries,
            retry_base_delay_s=config.retry_base_delay_s,
            max_concurrency=config.max_concurrency,
            rate_per_second=config.rate_per_second,
        )


@dataclass(frozen=True)
class QueryContext:
    """Параметры окна, общие для всех ключей прохода"""

    h_in: int
    h_out: int
    interval_minutes: int = DEFAULT_INTERVAL_MINUTES


class TokenBucket:
    """Ограничитель частоты запросов: `rate` токенов в секунду, ёмкость не меньше 1"""

    def __init__(
        self,
        rate: float,
        capacity: Optional[float] = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._clock = clock
        self._tokens = self.capacity
        self._updated = clock()
        self._lock = asyncio.Lock()

    async def acquire(self) -> None:
        async with self._lock:
            while True:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                await asyncio.sleep((1.0 - self._tokens) / self.rate)


def key_window(key: QueryKey, context: QueryContext) -> Tuple[datetime, datetime]:
    return prediction_window(key.time_bucket, context.h_out, context.interval_minutes)


def key_prompt(key: QueryKey, context: QueryContext) -> str:
    sensor = Sensor(id=0, lat=key.lat_bucket, lon=key.lon_bucket)
    return render_prompt(
        key.template_id, sensor, key.time_bucket, context.h_in, context.h_out, context.interval_minutes
    )


async def _fetch_one(
    provider: EventProvider,
    key: QueryKey,
    context: QueryContext,
    limits: RetrievalLimits,
    bucket: Optional[TokenBucket],
    stats: RetrievalStats,
) -> Tuple[List[EventRecord], bool]:
    """Записи по ключу и флаг `transient`: подстановка после сбоя в кеш не попадает"""
    window = key_window(key, context)
    prompt = key_prompt(key, context)
    attempts = limits.max_retries + 1
    stats.provider_calls += 1
    for attempt in range(attempts):
        if bucket is not None:
            await bucket.acquire()
        try:
            raw = await provider.fetch(key, prompt)
        except Exception as e:
            if attempt < attempts - 1:
                delay = limits.retry_base_delay_s * (2**attempt)
                logger.warning(
                    f"⚠️ Provider {provider.slug} failed for {key} "
                    f"(attempt {attempt + 1}/{attempts}): {e}; retrying in {delay:.2f}s"
                )
                stats.retries += 1
                await asyncio.sleep(delay)
                continue
            logger.warning(f"⚠️ Provider {provider.slug} gave up on {key}: {e}; using no-impact fallback")
            stats.fallbacks += 1
            return [none_record(window)], True
        try:
            return parse_response(raw, window), False
        except ResponseParseError as e:
            logger.warning(f"⚠️ Unparseable response for {key}: {e}; using no-impact fallback")
            stats.fallbacks += 1
            return [none_record(window)], True
    return [none_record(window)], True


async def retrieve(
    provider: EventProvider,
    keys: Sequence[QueryKey],
    cache: EventCache,
    context: QueryContext,
    limits: Optional[RetrievalLimits] = None,
    stats: Optional[RetrievalStats] = None,
) -> Dict[QueryKey, List[EventRecord]]:
    """
    Записи событий для каждого уникального ключа.

    Провайдер вызывается один раз на ключ-промах кеша; повторы после
    сбоев считаются отдельно в `stats.retries`. Сбой провайдера не
    прерывает прогон: после исчерпания повторов подставляется запись без
    влияния, она действует только в этом прогоне и в кеш не пишется.
    """
    limits = limits or RetrievalLimits()
    stats = stats if stats is not None else RetrievalStats()
    unique = list(dict.fromkeys(keys))
    stats.requests += len(keys)
    stats.unique_keys += len(unique)

    results: Dict[QueryKey, List[EventRecord]] = {}
    misses: List[QueryKey] = []
    for key in unique:
        cached = cache.get(key)
        if cached is None:
            misses.append(key)
        else:
            results[key] = cached
    stats.cache_hits = cache.hits
    stats.cache_misses = cache.misses

    if misses:
        semaphore = asyncio.Semaphore(limits.max_concurrency if provider.rate_limited else len(misses))
        bucket = TokenBucket(limits.rate_per_second) if provider.rate_limited else None

        async def _bounded(key: QueryKey) -> Tuple[List[EventRecord], bool]:
            async with semaphore:
                return await _fetch_one(provider, key, context, limits, bucket, stats)

        fetched = await asyncio.gather(*(_bounded(k) for k in misses))
        for key, (records, transient) in zip(misses, fetched):
            if not transient:
                cache.put(key, records)
            results[key] = records

    logger.info(
        f"🔎 Retrieval via {provider.slug}: {len(unique)} keys, {len(misses)} fetched, "
        f"{len(unique) - len(misses)} cached"
    )
    return results


def join_texts(records: Sequence[EventRecord]) -> str:
    """Тексты событий сенсора в одну строку для эмбеддинга"""
    return ", ".join(r.text for r in records if r.text)


class EventSource:
    """
    Тексты событий по якорям окон: один запрос на (сенсор, якорь),
    дедупликация по QueryKey, затем обратная сборка по сенсорам.
    """

    def __init__(
        self,
        sensors: Sequence[Sensor],
        series_start: datetime,
        interval_minutes: int,
        template_id: TemplateId,
        context: QueryContext,
        grid_minutes: Optional[int] = None,
    ):
        self.sensors = list(sensors)
        self.series_start = series_start
        self.interval_minutes = interval_minutes
        self.template_id = template_id
        self.context = context
        self.grid_minutes = grid_minutes or interval_minutes

    def anchor_time(self, anchor: int) -> datetime:
        return self.series_start + timedelta(minutes=self.interval_minutes * anchor)

    def keys_for(self, anchor: int) -> List[QueryKey]:
        ts = self.anchor_time(anchor)
        return [query_key(s, ts, self.template_id, self.grid_minutes) for s in self.sensors]

    async def collect(
        self,
        anchors: Sequence[int],
        provider: EventProvider,
        cache: EventCache,
        limits: Optional[RetrievalLimits] = None,
        stats: Optional[RetrievalStats] = None,
    ) -> Dict[int, List[str]]:
        per_anchor = {a: self.keys_for(a) for a in dict.fromkeys(anchors)}
        all_keys = [k for keys in per_anchor.values() for k in keys]
        results = await retrieve(provider, all_keys, cache, self.context, limits, stats)
        return {a: [join_texts(results[k]) for k in keys] for a, keys in per_anchor.items()}


def build_fixture(
    records: Sequence[EventRecord],
    sensors: Sequence[Sensor],
    anchor_times: Sequence[datetime],
    template_id: TemplateId,
    context: QueryContext,
    grid_minutes: Optional[int] = None,
) -> Dict[str, str]:
    """
    Фикстура mock-провайдера из истинных записей синтетики.

    Шаблоны меняют состав ответа: P2 оставляет одно самое сильное
    событие, P3 не видит погоду, P4 не видит преступления.
    """
    grid = grid_minutes or context.interval_minutes
    by_node: Dict[int, List[EventRecord]] = {}
    for r in records:
        if r.impact != Impact.none:
            by_node.setdefault(r.node_id, []).append(r)

    grouped: Dict[str, List[EventRecord]] = {}
    for ts in dict.fromkeys(anchor_times):
        for sensor in sensors:
            key = query_key(sensor, ts, template_id, grid)
            start, end = key_window(key, context)
            hits = [r for r in by_node.get(sensor.id, []) if r.overlaps(start, end)]
            hits = _template_view(hits, template_id)
            if hits:
                bucket = grouped.setdefault(key.canonical, [])
                bucket.extend(r for r in hits if r not in bucket)

    return {
        canonical: json.dumps(
            {"Event": ", ".join(r.text for r in hits), "Impact": [r.impact.label for r in hits]}
        )
        for canonical, hits in sorted(grouped.items())
    }


def _template_view(records: List[EventRecord], template_id: TemplateId) -> List[EventRecord]:
    if template_id == "P2" and records:
        return [max(records, key=lambda r: r.impact.rank)]
    if template_id == "P3":
        return [r for r in records if r.category != "weather"]
    if template_id == "P4":
        return [r for r in records if r.category != "crime"]
    return records


def impact_distribution(records: Sequence[EventRecord]) -> List[Dict[str, object]]:
    """Число и доля записей по классам влияния"""
    total = len(records)
    rows = []
    for impact in Impact.ordered():
        count = sum(1 for r in records if r.impact == impact)
        rows.append(
            {"impact": impact.value, "count": count, "share": count / total if total else 0.0}
        )
    return rows
