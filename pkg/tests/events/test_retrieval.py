import json
from datetime import datetime, timedelta

import pytest

from fuse_traffic.core.errors import RetrievalError
from fuse_traffic.schemas.events import EventRecord, Impact, QueryKey, RetrievalStats, Sensor
from fuse_traffic.services.event_query import EventCache, query_key
from fuse_traffic.services.providers import EventProvider, MockEventProvider
from fuse_traffic.services.retrieval import (
    EventSource,
    QueryContext,
    RetrievalLimits,
    TokenBucket,
    build_fixture,
    impact_distribution,
    join_texts,
    retrieve,
)

CONTEXT = QueryContext(h_in=12, h_out=12)
NO_WAIT = RetrievalLimits(max_retries=2, retry_base_delay_s=0.0)


class CountingProvider(EventProvider):
    slug = "mock"

    def __init__(self, response: str = '{"Event": "Road work"}'):
        self.response = response
        self.calls = 0

    async def fetch(self, key: QueryKey, prompt: str) -> str:
        self.calls += 1
        return self.response


class FailingProvider(EventProvider):
    slug = "live"

    def __init__(self):
        self.calls = 0

    async def fetch(self, key: QueryKey, prompt: str) -> str:
        self.calls += 1
        raise RetrievalError("event API returned HTTP 503")


def _keys(k: int, start: datetime) -> list[QueryKey]:
    return [
        query_key(Sensor(id=i, lat=34.0 + 0.01 * i, lon=-118.0), start, "P1") for i in range(k)
    ]


async def test_repeated_queries_call_provider_once_per_key(la_time):
    unique = _keys(25, la_time)
    batch = [unique[i % 25] for i in range(1000)]
    provider, cache, stats = CountingProvider(), EventCache(), RetrievalStats()

    results = await retrieve(provider, batch, cache, CONTEXT, NO_WAIT, stats)
    assert provider.calls == 25
    assert set(results) == set(unique)
    assert stats.requests == 1000 and stats.unique_keys == 25

    await retrieve(provider, batch, cache, CONTEXT, NO_WAIT, stats)
    assert provider.calls == 25
    assert stats.cache_hits == 25 and stats.cache_misses == 25


async def test_failing_provider_degrades_to_no_impact(la_time, caplog_loguru):
    provider, stats = FailingProvider(), RetrievalStats()
    keys = _keys(3, la_time)
    results = await retrieve(provider, keys, EventCache(), CONTEXT, NO_WAIT, stats)
    assert all(len(r) == 1 and r[0].impact == Impact.none for r in results.values())
    assert stats.fallbacks == 3
    # первая попытка и два повтора на ключ
    assert provider.calls == 9
    assert stats.provider_calls == 3 and stats.retries == 6
    assert any("retrying" in m for m in caplog_loguru)


async def test_unparseable_response_falls_back(la_time):
    provider, stats = CountingProvider("the model refused"), RetrievalStats()
    (key,) = _keys(1, la_time)
    results = await retrieve(provider, [key], EventCache(), CONTEXT, NO_WAIT, stats)
    assert results[key][0].impact == Impact.none
    assert provider.calls == 1 and stats.fallbacks == 1


async def test_fallbacks_are_not_cached_and_refetched_later(la_time, tmp_path):
    keys = _keys(3, la_time)
    cache = EventCache()
    await retrieve(FailingProvider(), keys, cache, CONTEXT, NO_WAIT)
    assert len(cache) == 0

    path = tmp_path / "cache.json"
    cache.save(path)
    healthy = CountingProvider('{"Event": "Road work", "Impact": "High"}')
    results = await retrieve(healthy, keys, EventCache.load(path), CONTEXT, NO_WAIT)
    assert healthy.calls == 3
    assert [results[k][0].impact for k in keys] == [Impact.high] * 3


async def test_unparseable_response_is_not_cached(la_time):
    (key,) = _keys(1, la_time)
    cache = EventCache()
    await retrieve(CountingProvider("the model refused"), [key], cache, CONTEXT, NO_WAIT)
    assert key not in cache


async def test_records_carry_prediction_window(la_time):
    (key,) = _keys(1, la_time)
    results = await retrieve(CountingProvider(), [key], EventCache(), CONTEXT, NO_WAIT)
    record = results[key][0]
    assert record.window_start == la_time + timedelta(minutes=5)
    assert record.window_end == la_time + timedelta(minutes=60)


async def test_event_source_joins_texts_per_sensor():
    start = datetime(2012, 3, 2, 0, 0)
    sensors = [
        Sensor(id=0, lat=34.0501, lon=-118.25),
        Sensor(id=1, lat=34.0502, lon=-118.25),
        Sensor(id=2, lat=35.0, lon=-119.0),
    ]
    source = EventSource(sensors, start, 5, "P1", CONTEXT)
    fixture = {
        k.canonical: '{"Event": "Parade, Street fair"}' for k in source.keys_for(11)[:1]
    }
    provider = MockEventProvider(fixture)
    texts = await source.collect([11, 11, 12], provider, EventCache())
    assert texts[11] == ["Parade, Street fair", "Parade, Street fair", ""]
    assert texts[12] == ["", "", ""]
    # сенсоры 0 и 1 делят ключ
    assert provider.calls == 4


def _record(node: int, impact: Impact, text: str, category: str, start: datetime) -> EventRecord:
    return EventRecord(
        node_id=node,
        window_start=start,
        window_end=start + timedelta(minutes=30),
        impact=impact,
        text=text,
        category=category,
    )


@pytest.fixture
def truth(la_time):
    t = la_time + timedelta(minutes=20)
    return [
        _record(0, Impact.moderate, "Crash on the freeway", "accident", t),
        _record(0, Impact.high, "Severe storm flooding", "weather", t),
        _record(1, Impact.minor, "Robbery downtown", "crime", t),
        _record(1, Impact.high, "Bridge closure", "accident", t + timedelta(hours=5)),
    ]


SENSORS = [Sensor(id=0, lat=34.05, lon=-118.25), Sensor(id=1, lat=34.10, lon=-118.30)]


def test_fixture_holds_overlapping_events(truth, la_time):
    fixture = build_fixture(truth, SENSORS, [la_time], "P1", CONTEXT)
    key0 = query_key(SENSORS[0], la_time, "P1").canonical
    key1 = query_key(SENSORS[1], la_time, "P1").canonical
    assert json.loads(fixture[key0]) == {
        "Event": "Crash on the freeway, Severe storm flooding",
        "Impact": ["Moderate Impact", "High Impact"],
    }
    assert json.loads(fixture[key1])["Event"] == "Robbery downtown"


@pytest.mark.parametrize(
    "template_id, expected",
    [
        ("P2", "Severe storm flooding"),
        ("P3", "Crash on the freeway"),
        ("P4", "Crash on the freeway, Severe storm flooding"),
    ],
)
def test_fixture_template_views(truth, la_time, template_id, expected):
    fixture = build_fixture(truth, SENSORS, [la_time], template_id, CONTEXT)
    key0 = query_key(SENSORS[0], la_time, template_id).canonical
    assert json.loads(fixture[key0])["Event"] == expected
    key1 = query_key(SENSORS[1], la_time, template_id).canonical
    assert (key1 in fixture) == (template_id != "P4")


async def test_fixture_round_trips_through_mock_provider(truth, la_time):
    fixture = build_fixture(truth, SENSORS, [la_time], "P1", CONTEXT)
    key = query_key(SENSORS[0], la_time, "P1")
    results = await retrieve(MockEventProvider(fixture), [key], EventCache(), CONTEXT)
    assert [r.impact for r in results[key]] == [Impact.moderate, Impact.high]


def test_impact_distribution(truth):
    rows = impact_distribution(truth)
    assert [r["impact"] for r in rows] == ["none", "minor", "moderate", "high"]
    assert [r["count"] for r in rows] == [0, 1, 1, 2]
    assert sum(r["share"] for r in rows) == pytest.approx(1.0)
    assert all(r["share"] == 0.0 for r in impact_distribution([]))


def test_join_texts_skips_empty(truth, la_time):
    empty = EventRecord(node_id=0, window_start=la_time, window_end=la_time, impact=Impact.none)
    assert join_texts([truth[0], empty, truth[2]]) == "Crash on the freeway, Robbery downtown"


async def test_token_bucket_rejects_zero_rate_and_grants_burst():
    with pytest.raises(ValueError):
        TokenBucket(0.0)
    bucket = TokenBucket(rate=1000.0)
    for _ in range(5):
        await bucket.acquire()
