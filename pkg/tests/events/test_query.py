from datetime import datetime

import pytest

from fuse_traffic.schemas.events import EventRecord, Impact, Sensor
from fuse_traffic.services.event_query import (
    EventCache,
    dedup,
    floor_time,
    query_key,
    reassemble,
)


def test_identical_requests_collapse(la_time):
    sensor = Sensor(id=3, lat=34.0522, lon=-118.2437)
    keys, back = dedup([(sensor, la_time), (sensor, la_time)], "P1")
    assert len(keys) == 1
    assert back == [0, 0]


def test_empty_batch():
    assert dedup([], "P1") == ([], [])


def test_rounded_locations_define_keys(la_time):
    # 207 сенсоров на 12 различных округлённых точках
    locations = [(34.0 + 0.01 * i, -118.2 - 0.01 * i) for i in range(12)]
    sensors = [
        Sensor(id=i, lat=locations[i % 12][0] + 0.0001, lon=locations[i % 12][1] - 0.0002)
        for i in range(207)
    ]
    keys, back = dedup([(s, la_time) for s in sensors], "P1")
    assert len(keys) == 12
    assert len(back) == 207 and max(back) == 11


def test_template_and_time_grid_separate_keys(la_time):
    sensor = Sensor(id=0, lat=34.0, lon=-118.0)
    assert query_key(sensor, la_time, "P1") != query_key(sensor, la_time, "P2")
    later = la_time.replace(minute=42)
    assert query_key(sensor, la_time, "P1") == query_key(sensor, later, "P1")
    assert query_key(sensor, la_time, "P1", 60).time_bucket == datetime(2012, 3, 2, 17, 0)


@pytest.mark.parametrize(
    "ts, grid, expected",
    [
        (datetime(2012, 3, 2, 17, 44, 30), 5, datetime(2012, 3, 2, 17, 40)),
        (datetime(2012, 3, 2, 0, 14), 15, datetime(2012, 3, 2, 0, 0)),
        (datetime(2012, 3, 2, 23, 59), 60, datetime(2012, 3, 2, 23, 0)),
    ],
)
def test_floor_time(ts, grid, expected):
    assert floor_time(ts, grid) == expected


def test_reassemble_restores_request_order(la_time):
    a = Sensor(id=0, lat=34.0, lon=-118.0)
    b = Sensor(id=1, lat=35.0, lon=-119.0)
    c = Sensor(id=2, lat=34.0, lon=-118.0)
    batch = [(a, la_time), (b, la_time), (c, la_time)]
    keys, back = dedup(batch, "P1")
    window = (la_time, la_time)
    results = {
        keys[0]: [
            EventRecord(node_id=0, window_start=window[0], window_end=window[1],
                        impact=Impact.high, text="Crash")
        ],
        keys[1]: [
            EventRecord(node_id=0, window_start=window[0], window_end=window[1],
                        impact=Impact.none, text="")
        ],
    }
    per_request = reassemble(batch, keys, back, results)
    assert [r[0].text for r in per_request] == ["Crash", "", "Crash"]
    assert [r[0].node_id for r in per_request] == [0, 1, 2]


def test_cache_counters_and_first_writer_wins(tmp_path, la_time):
    cache = EventCache()
    key = query_key(Sensor(id=0, lat=34.0, lon=-118.0), la_time, "P1")
    first = [EventRecord(node_id=0, window_start=la_time, window_end=la_time,
                         impact=Impact.minor, text="Fair")]
    assert cache.get(key) is None
    cache.put(key, first)
    cache.put(key, [])
    assert cache.get(key) == first
    assert (cache.hits, cache.misses) == (1, 1)

    path = tmp_path / "cache.json"
    cache.save(path)
    loaded = EventCache.load(path)
    assert key in loaded and loaded.records(key) == first
    assert (loaded.hits, loaded.misses) == (0, 0)
